#include "nhreduce/staged.hpp"

#include <cmath>

namespace nhreduce {

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

BundleSpec product_bundle(int total_dim, int base_dim) {
  BundleSpec b;
  b.total = euclidean_manifold(total_dim);
  b.base = euclidean_manifold(base_dim);
  b.phi = [base_dim](const VectorXd& eps) { return VectorXd(eps.head(base_dim)); };
  b.phi_diff = [base_dim](const VectorXd&, const VectorXd& d) {
    return VectorXd(d.head(base_dim));
  };
  b.fiber_chart_dim = total_dim - base_dim;
  b.fiber_retract = [base_dim, total_dim](const VectorXd& eps, const VectorXd& u) {
    VectorXd out = eps;
    out.tail(total_dim - base_dim) += u;
    return out;
  };
  return b;
}

}  // namespace

DldpsSystem build_particle_full(double h_step) {
  if (h_step <= 0.0) throw Error("h_step must be positive");
  DldpsSystem sys;
  sys.bundle = product_bundle(3, 3);
  sys.bundle.fiber_chart_dim = 0;
  sys.bundle.fiber_retract = [](const VectorXd& eps, const VectorXd&) { return eps; };

  sys.lagrangian = [h_step](const VectorXd& q0, const VectorXd& q1) {
    return (q1 - q0).squaredNorm() / (2.0 * h_step);
  };
  sys.d1 = [h_step](const VectorXd& q0, const VectorXd& q1, const VectorXd& d) {
    return -(q1 - q0).dot(d) / h_step;
  };
  sys.d2 = [h_step](const VectorXd& q0, const VectorXd& q1, const VectorXd& d) {
    return (q1 - q0).dot(d) / h_step;
  };
  sys.var_basis = [](const VectorXd& q0, const VectorXd&) {
    return std::vector<VectorXd>{vec({1.0, 0.0, q0[1]}), vec({0.0, 1.0, 0.0})};
  };
  sys.kin_residual = [](const VectorXd& q0, const VectorXd& q1) {
    VectorXd r(1);
    r[0] = q1[2] - q0[2] - 0.5 * (q0[1] + q1[1]) * (q1[0] - q0[0]);
    return r;
  };
  sys.chain_map = [](const PathPair&, const PathPair&, const VectorXd&) {
    return VectorXd(VectorXd::Zero(3));
  };
  sys.var_dim = 2;
  sys.kin_dim = 1;
  sys.validate();
  return sys;
}

DldpsSystem build_particle_reduced(ParticleStage stage, double h_step) {
  if (h_step <= 0.0) throw Error("h_step must be positive");
  DldpsSystem sys;

  switch (stage) {
    case ParticleStage::H: {
      // v = (x, y, w) over r = (x, y).
      sys.bundle = product_bundle(3, 2);
      sys.lagrangian = [h_step](const VectorXd& v, const VectorXd& r) {
        const double dx = r[0] - v[0], dy = r[1] - v[1];
        return (dx * dx + dy * dy + v[2] * v[2]) / (2.0 * h_step);
      };
      sys.d1 = [h_step](const VectorXd& v, const VectorXd& r, const VectorXd& d) {
        return (-(r[0] - v[0]) * d[0] - (r[1] - v[1]) * d[1] + v[2] * d[2]) / h_step;
      };
      sys.d2 = [h_step](const VectorXd& v, const VectorXd& r, const VectorXd& d) {
        return ((r[0] - v[0]) * d[0] + (r[1] - v[1]) * d[1]) / h_step;
      };
      sys.var_basis = [](const VectorXd& v, const VectorXd&) {
        return std::vector<VectorXd>{vec({1.0, 0.0, -v[1]}), vec({0.0, 1.0, 0.0})};
      };
      sys.kin_residual = [](const VectorXd& v, const VectorXd& r) {
        VectorXd res(1);
        res[0] = v[2] - 0.5 * (v[1] + r[1]) * (r[0] - v[0]);
        return res;
      };
      // P((v0,r1),(v1,r2))((a, b, -y1 a), 0) = (0, 0, y1 a), y1 read from r1.
      sys.chain_map = [](const PathPair& prev, const PathPair&, const VectorXd& d) {
        return vec({0.0, 0.0, prev.m_next[1] * d[0]});
      };
      break;
    }
    case ParticleStage::G: {
      // v = (y, u, w) over r = (y).
      sys.bundle = product_bundle(3, 1);
      sys.lagrangian = [h_step](const VectorXd& v, const VectorXd& r) {
        const double dy = r[0] - v[0];
        return (v[1] * v[1] + dy * dy + v[2] * v[2]) / (2.0 * h_step);
      };
      sys.d1 = [h_step](const VectorXd& v, const VectorXd& r, const VectorXd& d) {
        return (-(r[0] - v[0]) * d[0] + v[1] * d[1] + v[2] * d[2]) / h_step;
      };
      sys.d2 = [h_step](const VectorXd& v, const VectorXd& r, const VectorXd& d) {
        return (r[0] - v[0]) * d[0] / h_step;
      };
      sys.var_basis = [](const VectorXd& v, const VectorXd&) {
        return std::vector<VectorXd>{vec({0.0, -1.0, -v[0]}), vec({1.0, 0.0, 0.0})};
      };
      sys.kin_residual = [](const VectorXd& v, const VectorXd& r) {
        VectorXd res(1);
        res[0] = v[2] - 0.5 * (v[0] + r[0]) * v[1];
        return res;
      };
      // Image of (a, b, y1 a) under dY_G is (b, -a, -y1 a); the chained
      // variation is (0, a, y1 a) with y1 read from r1.
      sys.chain_map = [](const PathPair& prev, const PathPair&, const VectorXd& d) {
        const double a = -d[1];
        return vec({0.0, a, prev.m_next[0] * a});
      };
      break;
    }
    case ParticleStage::GH: {
      // v = (y, w, u) over r = (y).
      sys.bundle = product_bundle(3, 1);
      sys.lagrangian = [h_step](const VectorXd& v, const VectorXd& r) {
        const double dy = r[0] - v[0];
        return (v[2] * v[2] + dy * dy + v[1] * v[1]) / (2.0 * h_step);
      };
      sys.d1 = [h_step](const VectorXd& v, const VectorXd& r, const VectorXd& d) {
        return (-(r[0] - v[0]) * d[0] + v[1] * d[1] + v[2] * d[2]) / h_step;
      };
      sys.d2 = [h_step](const VectorXd& v, const VectorXd& r, const VectorXd& d) {
        return (r[0] - v[0]) * d[0] / h_step;
      };
      sys.var_basis = [](const VectorXd& v, const VectorXd&) {
        return std::vector<VectorXd>{vec({0.0, -v[0], -1.0}), vec({1.0, 0.0, 0.0})};
      };
      sys.kin_residual = [](const VectorXd& v, const VectorXd& r) {
        VectorXd res(1);
        res[0] = v[1] - 0.5 * (v[0] + r[0]) * v[2];
        return res;
      };
      // Image of (a, b, y1 a) is (b, -y1 a, -a); the chained variation is
      // (0, y1 a, a).
      sys.chain_map = [](const PathPair& prev, const PathPair&, const VectorXd& d) {
        const double a = -d[2];
        return vec({0.0, prev.m_next[0] * a, a});
      };
      break;
    }
  }
  sys.var_dim = 2;
  sys.kin_dim = 1;
  sys.validate();
  return sys;
}

ReductionMap upsilon_staged(ParticleStage stage) {
  ReductionMap map;
  switch (stage) {
    case ParticleStage::H:
      map.forward = [](const PathPair& p) {
        return PathPair{vec({p.eps[0], p.eps[1], p.m_next[2] - p.eps[2]}),
                        vec({p.m_next[0], p.m_next[1]})};
      };
      map.fwd_diff = [](const PathPair&, const TangentPair& t) {
        return TangentPair{vec({t.eps[0], t.eps[1], t.m_next[2] - t.eps[2]}),
                           vec({t.m_next[0], t.m_next[1]})};
      };
      map.lift = [](const VectorXd& seed, const DiscretePath& reduced) {
        DiscretePath full;
        double z = seed[2];
        for (const PathPair& p : reduced.pairs) {
          const double z_next = z + p.eps[2];
          full.pairs.push_back(PathPair{vec({p.eps[0], p.eps[1], z}),
                                        vec({p.m_next[0], p.m_next[1], z_next})});
          z = z_next;
        }
        return full;
      };
      break;
    case ParticleStage::G:
      map.forward = [](const PathPair& p) {
        return PathPair{
            vec({p.eps[1], p.m_next[0] - p.eps[0], p.m_next[2] - p.eps[2]}),
            vec({p.m_next[1]})};
      };
      map.fwd_diff = [](const PathPair&, const TangentPair& t) {
        return TangentPair{
            vec({t.eps[1], t.m_next[0] - t.eps[0], t.m_next[2] - t.eps[2]}),
            vec({t.m_next[1]})};
      };
      map.lift = [](const VectorXd& seed, const DiscretePath& reduced) {
        DiscretePath full;
        double x = seed[0], z = seed[2];
        for (const PathPair& p : reduced.pairs) {
          const double x_next = x + p.eps[1];
          const double z_next = z + p.eps[2];
          full.pairs.push_back(PathPair{vec({x, p.eps[0], z}),
                                        vec({x_next, p.m_next[0], z_next})});
          x = x_next;
          z = z_next;
        }
        return full;
      };
      break;
    case ParticleStage::GH:
      // Source points are H-level pairs ((x0, y0, w), (x1, y1)).
      map.forward = [](const PathPair& p) {
        return PathPair{vec({p.eps[1], p.eps[2], p.m_next[0] - p.eps[0]}),
                        vec({p.m_next[1]})};
      };
      map.fwd_diff = [](const PathPair&, const TangentPair& t) {
        return TangentPair{vec({t.eps[1], t.eps[2], t.m_next[0] - t.eps[0]}),
                           vec({t.m_next[1]})};
      };
      map.lift = [](const VectorXd& seed, const DiscretePath& reduced) {
        DiscretePath h_level;
        double x = seed[0];
        for (const PathPair& p : reduced.pairs) {
          const double x_next = x + p.eps[2];
          h_level.pairs.push_back(
              PathPair{vec({x, p.eps[0], p.eps[1]}), vec({x_next, p.m_next[0]})});
          x = x_next;
        }
        return h_level;
      };
      break;
  }
  return map;
}

PathPair staged_f_map(const PathPair& gh_pair) {
  return PathPair{vec({gh_pair.eps[0], gh_pair.eps[2], gh_pair.eps[1]}),
                  gh_pair.m_next};
}

PathPair staged_f_inv(const PathPair& g_pair) {
  return PathPair{vec({g_pair.eps[0], g_pair.eps[2], g_pair.eps[1]}), g_pair.m_next};
}

PathPair particle_initial(double x0, double y0, double z0, double dx, double dy) {
  const double y1 = y0 + dy;
  const double z1 = z0 + 0.5 * (y0 + y1) * dx;
  PathPair p;
  p.eps = vec({x0, y0, z0});
  p.m_next = vec({x0 + dx, y1, z1});
  return p;
}

StagedEquivalenceReport staged_equivalence_test(double h_step, const PathPair& initial,
                                                int steps, double tol) {
  StagedEquivalenceReport rep;
  const DldpsSystem full = build_particle_full(h_step);
  NewtonOptions opt;
  opt.tol = 1e-13;
  const DiscretePath path = integrate(full, initial, steps, opt);

  const ReductionMap uh = upsilon_staged(ParticleStage::H);
  const ReductionMap ug = upsilon_staged(ParticleStage::G);
  const ReductionMap ugh = upsilon_staged(ParticleStage::GH);

  DiscretePath h_path, g_path, gh_path;
  for (const PathPair& p : path.pairs) {
    h_path.pairs.push_back(uh.forward(p));
    g_path.pairs.push_back(ug.forward(p));
    gh_path.pairs.push_back(ugh.forward(h_path.pairs.back()));
  }

  const auto residual_max = [tol](const DldpsSystem& sys, const DiscretePath& pp) {
    const TrajectoryReport r = verify_trajectory(sys, pp, tol);
    return std::max(r.max_dynamic, r.max_kinematic);
  };
  rep.max_full = residual_max(full, path);
  rep.max_h = residual_max(build_particle_reduced(ParticleStage::H, h_step), h_path);
  rep.max_g = residual_max(build_particle_reduced(ParticleStage::G, h_step), g_path);
  rep.max_gh = residual_max(build_particle_reduced(ParticleStage::GH, h_step), gh_path);

  for (int k = 0; k < path.size(); ++k) {
    const PathPair f_img = staged_f_map(gh_path.pairs[static_cast<size_t>(k)]);
    const PathPair& g_img = g_path.pairs[static_cast<size_t>(k)];
    rep.max_f_mismatch = std::max(
        rep.max_f_mismatch,
        std::max((f_img.eps - g_img.eps).cwiseAbs().maxCoeff(),
                 (f_img.m_next - g_img.m_next).cwiseAbs().maxCoeff()));
  }

  // G-conjugation condition on A^H; the group is abelian so the condition
  // reduces to translation invariance of the form. Checked bitwise on
  // mantissa-snapped points with dyadic shifts, where additions are exact.
  const AbelianConnection ah = abelian_translation_connection(3, {2});
  const auto snap = [](double x) { return std::ldexp(std::round(std::ldexp(x, 26)), -26); };
  const double shifts[][2] = {{0.25, -0.375}, {1.5, 0.625}, {-2.25, 0.0078125}};
  for (const PathPair& p : path.pairs) {
    VectorXd m0(3), m1(3);
    for (int i = 0; i < 3; ++i) {
      m0[i] = snap(p.eps[i]);
      m1[i] = snap(p.m_next[i]);
    }
    for (const auto& s : shifts) {
      const VectorXd g = vec({s[0], s[1]});
      const AbelianConnection ag = abelian_translation_connection(3, {0, 2});
      const VectorXd lhs = ah.form(ag.act(g, m0), ag.act(g, m1));
      const VectorXd rhs = ah.form(m0, m1);  // conjugation is trivial
      rep.max_conn_condition =
          std::max(rep.max_conn_condition, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }

  rep.pass = true;
  const auto fail = [&rep](const std::string& what) {
    if (rep.pass) rep.first_failure = what;
    rep.pass = false;
  };
  if (rep.max_full > tol) fail("full-level verification");
  if (rep.max_h > tol) fail("H-level verification");
  if (rep.max_g > tol) fail("G-level verification");
  if (rep.max_gh > tol) fail("(G/H)-level verification");
  if (rep.max_f_mismatch != 0.0) fail("F correspondence");
  if (rep.max_conn_condition != 0.0) fail("connection G-invariance");
  return rep;
}

}  // namespace nhreduce
