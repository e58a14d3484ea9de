#pragma once

// Affine discrete connections on the trivialized principal bundles used by
// the examples: connection form, level, horizontal lift, and the reduction
// map for left-invariant systems on SO(3).

#include <vector>

#include "nhreduce/dldps.hpp"
#include "nhreduce/matgroup.hpp"

namespace nhreduce {

/// Connection form A^h(g0, g1) = g1 h^{-1} g0^{-1} on the bundle G -> {e},
/// G = SO(3). Its zero set Hor = {(g0, g0 h)} is the horizontal space and
/// the level is gamma(g) = A(g,g)^{-1} = g h g^{-1}.
struct So3Connection {
  Mat3 h = Mat3::Identity();

  Mat3 form(const Mat3& g0, const Mat3& g1) const {
    return g1 * h.transpose() * g0.transpose();
  }
  Mat3 level(const Mat3& g) const { return form(g, g).transpose(); }
  /// The unique point over the (one-point) base with form(g0, .) = e.
  Mat3 hlift(const Mat3& g0) const { return g0 * h; }
};

So3Connection canonical_group_connection(const Mat3& h = Mat3::Identity());

/// Connection form A(m0, m1) = S(m1 - m0) on R^n -> R^n / R^k where the
/// subgroup acts by translation along the coordinates in `subgroup` and the
/// quotient keeps the complementary coordinates. Level is identically 0 and
/// the G-conjugation condition holds exactly (abelian group).
struct AbelianConnection {
  int ambient = 0;
  std::vector<int> subgroup;    // translated coordinates
  std::vector<int> complement;  // quotient coordinates

  VectorXd form(const VectorXd& m0, const VectorXd& m1) const;
  VectorXd level(const VectorXd&) const;
  VectorXd hlift(const VectorXd& m0, const VectorXd& r1) const;
  VectorXd reduce(const VectorXd& m) const;
  VectorXd act(const VectorXd& g, const VectorXd& m) const;
};

AbelianConnection abelian_translation_connection(int ambient,
                                                 std::vector<int> subgroup);

/// Tangent vector of C'(E), stored with the same layout as a PathPair.
using TangentPair = PathPair;

/// A concrete reduction map C'(E) -> C'(reduced total space): forward
/// projection, a seeded lift (reconstruction), and the forward differential.
struct ReductionMap {
  std::function<PathPair(const PathPair&)> forward;
  std::function<DiscretePath(const VectorXd& seed_eps, const DiscretePath&)> lift;
  std::function<TangentPair(const PathPair&, const TangentPair&)> fwd_diff;
};

/// Reduction map of a left-invariant system on G = SO(3) through the
/// connection A^h, in the model where the reduced variable is the group
/// element V = g0^{-1} g1 h^{-1} (for h = e this is W = g0^{-1} g1).
/// The lift from seed g0 is g_{k+1} = g_k V_k h.
ReductionMap upsilon_ll(const So3Connection& conn);

}  // namespace nhreduce
