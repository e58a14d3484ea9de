#pragma once

#include <stdexcept>
#include <string>

namespace nhreduce {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Newton iteration did not reach the requested tolerance.
struct NoConvergence : Error {
  int iterations;
  double final_residual;
  NoConvergence(int iters, double res, const std::string& where = "")
      : Error("no convergence after " + std::to_string(iters) +
              " iterations (residual " + std::to_string(res) + ")" +
              (where.empty() ? "" : " in " + where)),
        iterations(iters),
        final_residual(res) {}
};

/// Jacobian condition number exceeded the singularity threshold.
struct SingularJacobian : Error {
  explicit SingularJacobian(double cond)
      : Error("near-singular Jacobian (condition " + std::to_string(cond) + ")") {}
};

/// A quad ((eps0,m1),(eps1,m2)) violates phi(eps1) = m1.
struct IncompatibleQuad : Error {
  explicit IncompatibleQuad(double mismatch)
      : Error("incompatible quad: |phi(eps1) - m1| = " + std::to_string(mismatch)) {}
};

/// Rotation angle at or too close to pi; Cayley inverse undefined.
struct AngleAtPi : Error {
  explicit AngleAtPi(double angle)
      : Error("rotation angle " + std::to_string(angle) + " too close to pi") {}
};

/// vee() received a matrix that is not skew-symmetric.
struct NonSkewInput : Error {
  explicit NonSkewInput(double sym_norm)
      : Error("input not skew-symmetric (symmetric part norm " +
              std::to_string(sym_norm) + ")") {}
};

/// Inertia tensor violates its preconditions.
struct InvalidInertia : Error {
  explicit InvalidInertia(const std::string& why) : Error("invalid inertia: " + why) {}
};

/// Algebra element not admissible at the given configuration.
struct NotInGD : Error {
  explicit NotInGD(double residual)
      : Error("algebra element outside the admissibility bundle (residual " +
              std::to_string(residual) + ")") {}
};

/// Forward/inverse map pair failed the round-trip check.
struct InconsistentDiffeo : Error {
  explicit InconsistentDiffeo(double mismatch)
      : Error("diffeomorphism round trip failed (mismatch " +
              std::to_string(mismatch) + ")") {}
};

/// Reduced Legendre transform is (near) singular at the evaluation point.
struct NearSingularLegendre : Error {
  explicit NearSingularLegendre(double cond)
      : Error("reduced Legendre transform near singular (condition " +
              std::to_string(cond) + ")") {}
};

}  // namespace nhreduce
