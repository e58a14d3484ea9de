#include "nhreduce/connections.hpp"

#include <algorithm>

namespace nhreduce {

So3Connection canonical_group_connection(const Mat3& h) { return So3Connection{h}; }

VectorXd AbelianConnection::form(const VectorXd& m0, const VectorXd& m1) const {
  VectorXd w(subgroup.size());
  for (size_t i = 0; i < subgroup.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = m1[subgroup[i]] - m0[subgroup[i]];
  return w;
}

VectorXd AbelianConnection::level(const VectorXd&) const {
  return VectorXd::Zero(static_cast<Eigen::Index>(subgroup.size()));
}

VectorXd AbelianConnection::hlift(const VectorXd& m0, const VectorXd& r1) const {
  VectorXd m = VectorXd::Zero(ambient);
  for (size_t i = 0; i < complement.size(); ++i)
    m[complement[i]] = r1[static_cast<Eigen::Index>(i)];
  for (size_t i = 0; i < subgroup.size(); ++i)
    m[subgroup[i]] = m0[subgroup[i]];
  return m;
}

VectorXd AbelianConnection::reduce(const VectorXd& m) const {
  VectorXd r(complement.size());
  for (size_t i = 0; i < complement.size(); ++i)
    r[static_cast<Eigen::Index>(i)] = m[complement[i]];
  return r;
}

VectorXd AbelianConnection::act(const VectorXd& g, const VectorXd& m) const {
  VectorXd out = m;
  for (size_t i = 0; i < subgroup.size(); ++i)
    out[subgroup[i]] += g[static_cast<Eigen::Index>(i)];
  return out;
}

AbelianConnection abelian_translation_connection(int ambient, std::vector<int> subgroup) {
  AbelianConnection conn;
  conn.ambient = ambient;
  std::sort(subgroup.begin(), subgroup.end());
  conn.subgroup = subgroup;
  for (int i = 0; i < ambient; ++i)
    if (!std::binary_search(subgroup.begin(), subgroup.end(), i))
      conn.complement.push_back(i);
  return conn;
}

ReductionMap upsilon_ll(const So3Connection& conn) {
  ReductionMap map;
  const Mat3 h = conn.h;

  map.forward = [h](const PathPair& pair) {
    const Mat3 g0 = unflatten(pair.eps);
    const Mat3 g1 = unflatten(pair.m_next);
    return PathPair{flatten(g0.transpose() * g1 * h.transpose()), VectorXd(0)};
  };

  map.lift = [h](const VectorXd& seed_eps, const DiscretePath& reduced) {
    DiscretePath full;
    Mat3 g = unflatten(seed_eps);
    for (const PathPair& rp : reduced.pairs) {
      const Mat3 v = unflatten(rp.eps);
      const Mat3 g_next = g * v * h;
      full.pairs.push_back(PathPair{flatten(g), flatten(g_next)});
      g = g_next;
    }
    return full;
  };

  map.fwd_diff = [h](const PathPair& at, const TangentPair& t) {
    const Mat3 g0 = unflatten(at.eps);
    const Mat3 g1 = unflatten(at.m_next);
    const Mat3 dg0 = unflatten(t.eps);
    const Mat3 dg1 = unflatten(t.m_next);
    const Mat3 dv = g0.transpose() * dg1 * h.transpose() -
                    g0.transpose() * dg0 * g0.transpose() * g1 * h.transpose();
    return TangentPair{flatten(dv), VectorXd(0)};
  };

  return map;
}

}  // namespace nhreduce
