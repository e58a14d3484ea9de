#pragma once

// Discrete Suslov rigid body on SO(3): mass tensor, trace-form Lagrangian,
// Cayley constraint set, and the three system levels.

#include "nhreduce/llreduce.hpp"

namespace nhreduce {

/// Inertia tensor components with I12 = 0 (the admissible normal form).
struct InertiaParams {
  double i11 = 1.0, i22 = 2.0, i33 = 3.0;
  double i13 = 0.0, i23 = 0.0;

  Mat3 inertia() const;
  /// Throws InvalidInertia unless the matrix is positive definite.
  void validate() const;
};

/// Mass tensor associated to the inertia tensor:
///   diag( (I22+I33-I11)/2, (I11+I33-I22)/2, (I11+I22-I33)/2 ),
///   off-diagonals (1,3) = (3,1) = -I13, (2,3) = (3,2) = -I23.
/// Throws InvalidInertia on violated preconditions (including I12 != 0 for
/// the matrix overload).
Mat3 mass_tensor(const InertiaParams& params);
Mat3 mass_tensor(const Mat3& inertia);

/// L_d(g0, g1) = -tr(g1 J g0^t) and its partials along ambient tangents.
double suslov_lagrangian(const Mat3& j, const Mat3& g0, const Mat3& g1);
double suslov_d1(const Mat3& j, const Mat3& g0, const Mat3& g1, const Mat3& dg0);
double suslov_d2(const Mat3& j, const Mat3& g0, const Mat3& g1, const Mat3& dg1);

/// Third vee component of cay_inv(W); zero iff W lies in cay(d) with
/// d = {omega3 = 0}. Throws AngleAtPi near the chart boundary.
double suslov_sd_residual(const Mat3& w);

/// Closed-form reduced Legendre transform L(W) = W J - J W^t.
Mat3 suslov_legendre(const Mat3& j, const Mat3& w);

/// The LL data of the Suslov system (d = span{e1^, e2^}, closed-form
/// Legendre transform attached).
LlSystemSpec build_suslov_spec(const InertiaParams& params);

enum class SuslovLevel { full, eta, momentum };

DldpsSystem build_suslov(SuslovLevel level, const InertiaParams& params);

/// Initial pair for a given level from W0 = cay(hat((w1, w2, 0))) and, for
/// the full level, a seed g0.
PathPair suslov_initial(SuslovLevel level, const InertiaParams& params,
                        double w1, double w2, const Mat3& g0 = Mat3::Identity());

}  // namespace nhreduce
