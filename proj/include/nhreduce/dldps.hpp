#pragma once

// Generic discrete Lagrange-D'Alembert-Poincare systems on trivialized
// bundles: the nu_d residual, trajectory verification, and a Newton stepper.

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "nhreduce/errors.hpp"

namespace nhreduce {

using Eigen::VectorXd;
using Eigen::MatrixXd;

/// Chart-at-point description of an embedded manifold. Points live in
/// ambient coordinates; retract(p, u) maps chart coordinates u near 0 to a
/// point, with retract(p, 0) = p exactly and velocity tangent_basis(p)*u.
struct Manifold {
  int ambient_dim = 0;
  int chart_dim = 0;
  std::function<VectorXd(const VectorXd&, const VectorXd&)> retract;
  std::function<MatrixXd(const VectorXd&)> tangent_basis;  // ambient x chart
  std::function<double(const VectorXd&)> residual;         // membership defect
  std::function<VectorXd(const VectorXd&)> normalize;      // optional re-projection
  /// Optional partial inverse of retract: chart_coords(p, q) = u with
  /// retract(p, u) = q for q near p. Used by the step predictor.
  std::function<VectorXd(const VectorXd&, const VectorXd&)> chart_coords;
};

Manifold point_manifold();
Manifold euclidean_manifold(int n);
Manifold so3_manifold();

/// One element (eps_k, m_{k+1}) of C'(E) = E x M.
struct PathPair {
  VectorXd eps;
  VectorXd m_next;
};

/// Compatible sequence of path pairs: phi(eps_{k+1}) = m_{k+1}.
struct DiscretePath {
  std::vector<PathPair> pairs;
  int size() const { return static_cast<int>(pairs.size()); }
};

/// Fiber bundle phi: E -> M in an explicit trivialization.
struct BundleSpec {
  Manifold total;  // E
  Manifold base;   // M
  std::function<VectorXd(const VectorXd&)> phi;  // E -> M, ambient coords
  std::function<VectorXd(const VectorXd&, const VectorXd&)> phi_diff;  // dphi(eps)(deps)
  int fiber_chart_dim = 0;
  /// Retraction within the fiber over phi(eps): fiber_retract(eps, 0) = eps.
  std::function<VectorXd(const VectorXd&, const VectorXd&)> fiber_retract;
};

struct DldpsSystem;

using StepFn = std::function<PathPair(const DldpsSystem&, const PathPair& prev,
                                      const PathPair& guess, double tol, int max_iter)>;
using PredictFn = std::function<PathPair(const DldpsSystem&, const DiscretePath&)>;

/// A full system instance (E, L_d, D_d, D, P): bundle, Lagrangian with
/// partials, kinematic residual, variational-constraint basis, chaining map.
/// Well-posedness (var_dim + kin_dim = dim E) is enforced by validate().
struct DldpsSystem {
  BundleSpec bundle;
  std::function<double(const VectorXd& eps, const VectorXd& m)> lagrangian;
  // Partial differentials along ambient tangent vectors.
  std::function<double(const VectorXd&, const VectorXd&, const VectorXd&)> d1;
  std::function<double(const VectorXd&, const VectorXd&, const VectorXd&)> d2;
  // Basis of D_(eps,m): var_dim tangent vectors at eps.
  std::function<std::vector<VectorXd>(const VectorXd&, const VectorXd&)> var_basis;
  // Residual function whose zero set is D_d.
  std::function<VectorXd(const VectorXd&, const VectorXd&)> kin_residual;
  // NIVCM P: ((eps0,m1),(eps1,m2), deps1) -> tangent at eps0 in ker(dphi).
  std::function<VectorXd(const PathPair&, const PathPair&, const VectorXd&)> chain_map;
  int var_dim = 0;
  int kin_dim = 0;
  StepFn custom_step;     // optional specialized stepper
  PredictFn predictor;    // optional initial-guess rule
  // Optional analytic Jacobian of residual_vector with respect to the step
  // unknowns (fiber chart of cand.eps, then base chart of cand.m_next);
  // when absent the stepper falls back to central differences.
  std::function<MatrixXd(const DldpsSystem&, const PathPair& prev,
                         const PathPair& cand)> analytic_jacobian;

  /// Throws if var_dim + kin_dim != dim E or the fiber/base charts do not
  /// add up to the total chart.
  void validate() const;
};

/// Builds analytic-free d1/d2 via central differences of the Lagrangian
/// along ambient straight lines (valid when L extends smoothly to ambient
/// coordinates, as all in-repo Lagrangians do).
void attach_fd_partials(DldpsSystem& sys, double h = 1e-6);

/// The section of motion evaluated on (deps1, 0):
///   D1 L_d(eps1,m2)(deps1) + D2 L_d(eps0,m1)(dphi(eps1)(deps1))
///   + D1 L_d(eps0,m1)(P(quad)(deps1, 0)).
/// Throws IncompatibleQuad when phi(cand.eps) != prev.m_next beyond tol.
double eval_nu_d(const DldpsSystem& sys, const PathPair& prev, const PathPair& cand,
                 const VectorXd& deps1, double compat_tol = 1e-10);

/// First var_dim entries: eval_nu_d on each var_basis vector at cand.
/// Last kin_dim entries: kin_residual(cand).
VectorXd residual_vector(const DldpsSystem& sys, const PathPair& prev,
                         const PathPair& cand);

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double fd_step = 1e-7;
  double cond_limit = 1e12;
  int max_halvings = 30;
};

/// Solves residual_vector(prev, .) = 0 for the candidate pair. Unknowns are
/// the fiber coordinates of eps over the fixed base plus the chart
/// coordinates of m_next. Jacobian by central finite differences unless the
/// system supplies a custom stepper.
PathPair newton_step(const DldpsSystem& sys, const PathPair& prev,
                     const PathPair& guess, const NewtonOptions& opt = {});

/// Integrates `steps` Newton steps from the initial pair; the default
/// predictor transports the prior increment (Lie groups: reuse the previous
/// relative rotation; vector spaces: linear extrapolation).
DiscretePath integrate(const DldpsSystem& sys, const PathPair& initial, int steps,
                       const NewtonOptions& opt = {});

/// Per-step residual magnitudes of a discrete path.
struct StepRecord {
  double dynamic = 0.0;    // max |nu_d| over var_basis, quad ending at this pair
  double kinematic = 0.0;  // max |kin_residual| of this pair
  double drift = 0.0;      // manifold defect of eps and m_next
  double compat = 0.0;     // |phi(eps_k) - m_k| vs previous pair
};

struct TrajectoryReport {
  std::vector<StepRecord> steps;
  double max_dynamic = 0.0;
  double max_kinematic = 0.0;
  double max_drift = 0.0;
  double max_compat = 0.0;
  bool pass = false;
  int first_fail = -1;  // index of the first failing pair, -1 if none
};

TrajectoryReport verify_trajectory(const DldpsSystem& sys, const DiscretePath& path,
                                   double tol);

/// Max relative error between analytic d1/d2 and central differences along
/// random chart tangents at the given sample pairs.
double fd_check_gradients(const DldpsSystem& sys, const std::vector<PathPair>& samples,
                          double h = 1e-6, unsigned seed = 12345,
                          int directions_per_sample = 4);

/// Fiber bundle diffeomorphism pair (F, f) with inverses and differentials.
/// The base differential is optional; when absent the transported D2 falls
/// back to central differences through f^{-1}.
struct DiffeoPair {
  std::function<VectorXd(const VectorXd&)> fwd_total;   // F: E -> E'
  std::function<VectorXd(const VectorXd&)> inv_total;   // F^{-1}
  std::function<VectorXd(const VectorXd&)> fwd_base;    // f: M -> M'
  std::function<VectorXd(const VectorXd&)> inv_base;    // f^{-1}
  std::function<VectorXd(const VectorXd&, const VectorXd&)> fwd_diff;  // dF(p)(v)
  std::function<VectorXd(const VectorXd&, const VectorXd&)> inv_diff;  // dF^{-1}(p')(v')
  std::function<VectorXd(const VectorXd&, const VectorXd&)> inv_base_diff;  // df^{-1}(m')(w')
};

/// Builds the system induced by a bundle isomorphism: L' = L o (FxF)^{-1},
/// transported constraints and chaining map. The round-trip F^{-1} o F = id
/// is checked on the given sample pairs (InconsistentDiffeo on failure).
DldpsSystem transport_system(const DldpsSystem& sys, const BundleSpec& target,
                             const DiffeoPair& maps,
                             const std::vector<PathPair>& samples,
                             double roundtrip_tol = 1e-12);

}  // namespace nhreduce
