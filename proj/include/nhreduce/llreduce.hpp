#pragma once

// Discrete LL pipeline on G = SO(3): the full system built from
// (G, L_d, S_d, d), its reduction to the group model, the transport to the
// momentum model, Euler-Poincare-Suslov residuals, reconstruction, the
// nonholonomic momentum map and its evolution, and connection independence.

#include <vector>

#include "nhreduce/connections.hpp"
#include "nhreduce/dldps.hpp"
#include "nhreduce/matgroup.hpp"

namespace nhreduce {

/// A left-invariant discrete nonholonomic system on SO(3): Lagrangian with
/// partials (along ambient matrix tangents), the variational subspace d of
/// so(3), and the membership residual of the constraint set S_d.
struct LlSystemSpec {
  std::function<double(const Mat3&, const Mat3&)> lagrangian;
  std::function<double(const Mat3&, const Mat3&, const Mat3&)> d1;
  std::function<double(const Mat3&, const Mat3&, const Mat3&)> d2;
  ConstraintSubspace d;
  std::function<VectorXd(const Mat3&)> sd_residual;  // zero iff W in S_d
  int sd_dim = 1;

  // Optional closed forms for the reduced Legendre transform; when absent
  // the generic expressions are used.
  std::function<Mat3(const Mat3&)> legendre;
  std::function<Mat3(const Mat3&, const Mat3&)> legendre_diff;

  double reduced_ell(const Mat3& w) const { return lagrangian(Mat3::Identity(), w); }
  /// d ell_d(W)(dW) along an ambient tangent.
  double reduced_ell_diff(const Mat3& w, const Mat3& dw) const {
    return d2(Mat3::Identity(), w, dw);
  }
};

/// The full system: bundle id_G : G -> G, P = 0, variational basis
/// {g0 * hat(e_i)} for the d basis, kinematic residual on g0^{-1} g1.
DldpsSystem build_m_ll(const LlSystemSpec& spec);

/// The reduced group model: bundle G -> {point}, Lagrangian ell_d,
/// variational basis {hat(e_i) * W} and chaining map
/// P((W0,.),(W1,.))(dW1, 0) = -W0 dW1 W1^{-1}.
DldpsSystem reduce_to_eta(const LlSystemSpec& spec);

/// Skew matrix R*_{W1}(d ell_d(W1)) - L*_{W0}(d ell_d(W0)); a pair (W0, W1)
/// satisfies the reduced equation of motion iff the d-projection of this
/// matrix vanishes and both W's lie in S_d.
Mat3 eta_residual(const LlSystemSpec& spec, const Mat3& w0, const Mat3& w1);

/// Reduced Legendre transform L(W) = R*_W(d ell_d(W)) as a skew matrix,
/// always evaluated generically (ignores any closed form the system data
/// may carry, so the two routes can be compared).
Mat3 reduced_legendre(const LlSystemSpec& spec, const Mat3& w);

/// Differential of the reduced Legendre transform along an ambient tangent.
Mat3 reduced_legendre_diff(const LlSystemSpec& spec, const Mat3& w, const Mat3& dw);

/// Solves L(W) = p by Newton iteration in the Cayley chart around `seed`.
/// The transform is only a local diffeomorphism, so iterates are confined to
/// a ball of radius `chart_radius` (rotation angle) around the seed; leaving
/// it raises NoConvergence rather than silently switching branch. Throws
/// NearSingularLegendre when the chart Jacobian degenerates.
Mat3 invert_legendre(const LlSystemSpec& spec, const Mat3& p,
                     const Mat3& seed = Mat3::Identity(), double tol = 1e-13,
                     int max_iter = 60, double chart_radius = 1.2);

/// The momentum model: transport of the group model under the reduced
/// Legendre transform. Points are vee coordinates of p. Stepping solves for
/// the two d-chart parameters of W = cay(omega), which keeps p in L(S_d) by
/// construction.
DldpsSystem build_m_s(const LlSystemSpec& spec);

/// Coefficients (against the d basis) of p_{k+1} - Ad*_{L^{-1}(p_k)}(p_k);
/// a momentum path is a trajectory iff these vanish and every p_k lies in
/// L(S_d).
VectorXd eps_residual(const LlSystemSpec& spec, const Mat3& p_k, const Mat3& p_k1,
                      const Mat3& seed = Mat3::Identity());

/// Lifts a reduced path through the connection A^h from seed g0:
/// g_{k+1} = g_k V_k h. The reduced path holds V_k in its eps slots.
DiscretePath reconstruct(const So3Connection& conn, const DiscretePath& reduced,
                         const Mat3& g0);

/// Discrete nonholonomic momentum map J_d(g0, g1)(xi) = -D1 L_d(g0,g1)(xi g0)
/// for xi in the admissibility bundle (xi in Ad_{g0}(d)); throws NotInGD
/// otherwise. `use_d2_form` evaluates the equivalent expression
/// D2 L_d(g0,g1)(xi g1) instead.
double momentum_map(const LlSystemSpec& spec, const Mat3& g0, const Mat3& g1,
                    const Vec3& xi, bool use_d2_form = false,
                    double membership_tol = 1e-8);

/// Residuals of the momentum evolution equation along a full trajectory for
/// the section xi_bar(g_k, g_{k+1}) = Ad_{g_k}(eta), eta in d. For the full
/// system (P = 0) the chaining term vanishes.
std::vector<double> momentum_evolution_check(const LlSystemSpec& spec,
                                             const DiscretePath& full_path,
                                             const Vec3& eta);

struct ConnectionIndependenceReport {
  double max_translation_mismatch = 0.0;  // |V_k - W_k h^{-1}|
  double max_residual_e = 0.0;            // group-model verification, h = e
  double max_residual_h = 0.0;            // h-model verification
  bool pass = false;
};

/// Projects a full trajectory through the connections A^e and A^h, verifies
/// both reduced paths under their respective systems, and checks that the
/// explicit diffeomorphism V = W h^{-1} matches the two projections.
ConnectionIndependenceReport connection_independence_check(
    const LlSystemSpec& spec, const Mat3& h, const DiscretePath& full_path,
    double tol = 1e-9);

/// The group model transported by the right translation W -> W h^{-1}
/// (the reduced system obtained from the connection A^h).
DldpsSystem eta_system_for_connection(const LlSystemSpec& spec, const Mat3& h);

}  // namespace nhreduce
