#include "nhreduce/dldps.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nhreduce/matgroup.hpp"

namespace nhreduce {

Manifold point_manifold() {
  Manifold m;
  m.ambient_dim = 0;
  m.chart_dim = 0;
  m.retract = [](const VectorXd& p, const VectorXd&) { return p; };
  m.tangent_basis = [](const VectorXd&) { return MatrixXd(0, 0); };
  m.residual = [](const VectorXd&) { return 0.0; };
  m.chart_coords = [](const VectorXd&, const VectorXd&) { return VectorXd(0); };
  return m;
}

Manifold euclidean_manifold(int n) {
  Manifold m;
  m.ambient_dim = n;
  m.chart_dim = n;
  m.retract = [](const VectorXd& p, const VectorXd& u) { return VectorXd(p + u); };
  m.tangent_basis = [n](const VectorXd&) { return MatrixXd(MatrixXd::Identity(n, n)); };
  m.residual = [](const VectorXd&) { return 0.0; };
  m.chart_coords = [](const VectorXd& p, const VectorXd& q) { return VectorXd(q - p); };
  return m;
}

Manifold so3_manifold() {
  Manifold m;
  m.ambient_dim = 9;
  m.chart_dim = 3;
  m.retract = [](const VectorXd& p, const VectorXd& u) {
    return flatten(unflatten(p) * cay(Vec3(u)));
  };
  m.tangent_basis = [](const VectorXd& p) {
    const Mat3 g = unflatten(p);
    MatrixXd basis(9, 3);
    for (int i = 0; i < 3; ++i)
      basis.col(i) = flatten(g * hat(Vec3::Unit(i)));
    return basis;
  };
  m.residual = [](const VectorXd& p) { return so3_defect(unflatten(p)); };
  m.normalize = [](const VectorXd& p) { return flatten(project_to_so3(unflatten(p))); };
  m.chart_coords = [](const VectorXd& p, const VectorXd& q) {
    const Mat3 rel = unflatten(p).transpose() * unflatten(q);
    return VectorXd(vee(cay_inv(rel), 1e-6));
  };
  return m;
}

void DldpsSystem::validate() const {
  const int dim_e = bundle.total.chart_dim;
  if (var_dim + kin_dim != dim_e)
    throw Error("ill-posed system: var_dim + kin_dim = " +
                std::to_string(var_dim + kin_dim) + " but dim E = " +
                std::to_string(dim_e));
  if (bundle.fiber_chart_dim + bundle.base.chart_dim != dim_e)
    throw Error("bundle charts inconsistent: fiber " +
                std::to_string(bundle.fiber_chart_dim) + " + base " +
                std::to_string(bundle.base.chart_dim) + " != dim E " +
                std::to_string(dim_e));
}

void attach_fd_partials(DldpsSystem& sys, double h) {
  const auto lag = sys.lagrangian;
  sys.d1 = [lag, h](const VectorXd& eps, const VectorXd& m, const VectorXd& deps) {
    return (lag(eps + h * deps, m) - lag(eps - h * deps, m)) / (2.0 * h);
  };
  sys.d2 = [lag, h](const VectorXd& eps, const VectorXd& m, const VectorXd& dm) {
    return (lag(eps, m + h * dm) - lag(eps, m - h * dm)) / (2.0 * h);
  };
}

static double max_abs(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double eval_nu_d(const DldpsSystem& sys, const PathPair& prev, const PathPair& cand,
                 const VectorXd& deps1, double compat_tol) {
  const double mismatch = max_abs(sys.bundle.phi(cand.eps) - prev.m_next);
  if (mismatch > compat_tol) throw IncompatibleQuad(mismatch);

  double value = sys.d1(cand.eps, cand.m_next, deps1);
  value += sys.d2(prev.eps, prev.m_next, sys.bundle.phi_diff(cand.eps, deps1));
  if (sys.chain_map)
    value += sys.d1(prev.eps, prev.m_next, sys.chain_map(prev, cand, deps1));
  return value;
}

VectorXd residual_vector(const DldpsSystem& sys, const PathPair& prev,
                         const PathPair& cand) {
  VectorXd r(sys.var_dim + sys.kin_dim);
  const auto basis = sys.var_basis(cand.eps, cand.m_next);
  for (int i = 0; i < sys.var_dim; ++i)
    r[i] = eval_nu_d(sys, prev, cand, basis[static_cast<size_t>(i)]);
  r.tail(sys.kin_dim) = sys.kin_residual(cand.eps, cand.m_next);
  return r;
}

namespace {

PathPair apply_unknowns(const DldpsSystem& sys, const PathPair& guess,
                        const VectorXd& u) {
  const int nf = sys.bundle.fiber_chart_dim;
  const int nb = sys.bundle.base.chart_dim;
  PathPair cand;
  cand.eps = nf > 0 ? sys.bundle.fiber_retract(guess.eps, u.head(nf)) : guess.eps;
  cand.m_next = nb > 0 ? sys.bundle.base.retract(guess.m_next, u.tail(nb)) : guess.m_next;
  return cand;
}

double jacobian_condition(const MatrixXd& j) {
  Eigen::JacobiSVD<MatrixXd> svd(j);
  const auto& s = svd.singularValues();
  const double smin = s[s.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s[0] / smin;
}

}  // namespace

PathPair newton_step(const DldpsSystem& sys, const PathPair& prev,
                     const PathPair& guess, const NewtonOptions& opt) {
  if (sys.custom_step) return sys.custom_step(sys, prev, guess, opt.tol, opt.max_iter);

  const int n = sys.var_dim + sys.kin_dim;
  PathPair cur = guess;
  const double mismatch = max_abs(sys.bundle.phi(cur.eps) - prev.m_next);
  if (mismatch > 1e-8) throw IncompatibleQuad(mismatch);

  // Re-project drifted manifold points once the solve has converged.
  const auto polished = [&sys](PathPair p) {
    if (sys.bundle.total.normalize && sys.bundle.total.residual(p.eps) > 1e-12)
      p.eps = sys.bundle.total.normalize(p.eps);
    if (sys.bundle.base.normalize && sys.bundle.base.residual(p.m_next) > 1e-12)
      p.m_next = sys.bundle.base.normalize(p.m_next);
    return p;
  };

  VectorXd r = residual_vector(sys, prev, cur);
  double rnorm = max_abs(r);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    if (rnorm <= opt.tol) return polished(cur);

    MatrixXd jac(n, n);
    if (sys.analytic_jacobian) {
      jac = sys.analytic_jacobian(sys, prev, cur);
    } else {
      for (int k = 0; k < n; ++k) {
        VectorXd u = VectorXd::Zero(n);
        u[k] = opt.fd_step;
        const VectorXd rp = residual_vector(sys, prev, apply_unknowns(sys, cur, u));
        u[k] = -opt.fd_step;
        const VectorXd rm = residual_vector(sys, prev, apply_unknowns(sys, cur, u));
        jac.col(k) = (rp - rm) / (2.0 * opt.fd_step);
      }
    }
    if (jacobian_condition(jac) > opt.cond_limit)
      throw SingularJacobian(jacobian_condition(jac));

    const VectorXd delta = jac.fullPivLu().solve(-r);
    if (!delta.allFinite()) throw SingularJacobian(std::numeric_limits<double>::infinity());

    // Damping: halve the step while the residual norm does not decrease.
    double scale = 1.0;
    PathPair next;
    VectorXd rn;
    double rn_norm = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= opt.max_halvings; ++halvings) {
      next = apply_unknowns(sys, cur, scale * delta);
      rn = residual_vector(sys, prev, next);
      rn_norm = max_abs(rn);
      if (rn_norm < rnorm || rn_norm <= opt.tol) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) throw NoConvergence(iter + 1, rnorm, "newton_step damping");
    cur = next;
    r = rn;
    rnorm = rn_norm;
  }
  if (rnorm <= opt.tol) return polished(cur);
  throw NoConvergence(opt.max_iter, rnorm, "newton_step");
}

namespace {

/// Default initial guess: base-point bundles reuse the last pair; product
/// bundles carry the fiber part over and extrapolate the base by the prior
/// chart increment.
PathPair default_predict(const DldpsSystem& sys, const DiscretePath& path) {
  const PathPair& last = path.pairs.back();
  const BundleSpec& b = sys.bundle;
  if (b.base.chart_dim == 0) return last;

  PathPair guess;
  const int fa = b.total.ambient_dim - b.base.ambient_dim;
  // Product layout E = M x fiber in ambient coordinates.
  guess.eps = VectorXd(b.total.ambient_dim);
  guess.eps.head(b.base.ambient_dim) = last.m_next;
  if (fa > 0) guess.eps.tail(fa) = last.eps.tail(fa);

  if (b.base.chart_coords) {
    const VectorXd inc = b.base.chart_coords(b.phi(last.eps), last.m_next);
    guess.m_next = b.base.retract(last.m_next, inc);
  } else {
    guess.m_next = last.m_next;
  }
  return guess;
}

}  // namespace

DiscretePath integrate(const DldpsSystem& sys, const PathPair& initial, int steps,
                       const NewtonOptions& opt) {
  const double kin0 = max_abs(sys.kin_residual(initial.eps, initial.m_next));
  if (kin0 > std::max(opt.tol, 1e-10))
    throw Error("integrate: initial pair violates the kinematic constraint (" +
                std::to_string(kin0) + ")");

  DiscretePath path;
  path.pairs.push_back(initial);
  for (int k = 0; k < steps; ++k) {
    const PathPair& prev = path.pairs.back();
    const PathPair guess = sys.predictor ? sys.predictor(sys, path)
                                         : default_predict(sys, path);
    try {
      path.pairs.push_back(newton_step(sys, prev, guess, opt));
    } catch (const NoConvergence& e) {
      throw NoConvergence(e.iterations, e.final_residual,
                          "integrate step " + std::to_string(k + 1));
    }
  }
  return path;
}

TrajectoryReport verify_trajectory(const DldpsSystem& sys, const DiscretePath& path,
                                   double tol) {
  TrajectoryReport rep;
  rep.steps.resize(static_cast<size_t>(path.size()));
  for (int k = 0; k < path.size(); ++k) {
    StepRecord& rec = rep.steps[static_cast<size_t>(k)];
    const PathPair& pair = path.pairs[static_cast<size_t>(k)];
    rec.kinematic = max_abs(sys.kin_residual(pair.eps, pair.m_next));
    rec.drift = std::max(sys.bundle.total.residual(pair.eps),
                         sys.bundle.base.residual(pair.m_next));
    if (k >= 1) {
      const PathPair& prev = path.pairs[static_cast<size_t>(k - 1)];
      rec.compat = max_abs(sys.bundle.phi(pair.eps) - prev.m_next);
      if (rec.compat <= 1e-8) {
        const auto basis = sys.var_basis(pair.eps, pair.m_next);
        for (const VectorXd& v : basis)
          rec.dynamic = std::max(rec.dynamic,
                                 std::abs(eval_nu_d(sys, prev, pair, v, 1e-8)));
      }
    }
    rep.max_dynamic = std::max(rep.max_dynamic, rec.dynamic);
    rep.max_kinematic = std::max(rep.max_kinematic, rec.kinematic);
    rep.max_drift = std::max(rep.max_drift, rec.drift);
    rep.max_compat = std::max(rep.max_compat, rec.compat);
    const bool ok = rec.dynamic <= tol && rec.kinematic <= tol &&
                    rec.drift <= std::max(tol, 1e-9) && rec.compat <= tol;
    if (!ok && rep.first_fail < 0) rep.first_fail = k;
  }
  rep.pass = rep.first_fail < 0;
  return rep;
}

double fd_check_gradients(const DldpsSystem& sys, const std::vector<PathPair>& samples,
                          double h, unsigned seed, int directions_per_sample) {
  if (h < 1e-8 || h > 1e-4)
    throw Error("fd_check_gradients: step must lie in [1e-8, 1e-4]");
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;

  const auto rel_err = [](double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) / scale;
  };

  for (const PathPair& s : samples) {
    const MatrixXd be = sys.bundle.total.tangent_basis(s.eps);
    const MatrixXd bm = sys.bundle.base.tangent_basis(s.m_next);
    for (int d = 0; d < directions_per_sample; ++d) {
      if (be.cols() > 0) {
        VectorXd u(be.cols());
        for (int i = 0; i < u.size(); ++i) u[i] = gauss(rng);
        const double analytic = sys.d1(s.eps, s.m_next, be * u);
        const double fd = (sys.lagrangian(sys.bundle.total.retract(s.eps, h * u), s.m_next) -
                           sys.lagrangian(sys.bundle.total.retract(s.eps, -h * u), s.m_next)) /
                          (2.0 * h);
        worst = std::max(worst, rel_err(analytic, fd));
      }
      if (bm.cols() > 0) {
        VectorXd w(bm.cols());
        for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);
        const double analytic = sys.d2(s.eps, s.m_next, bm * w);
        const double fd = (sys.lagrangian(s.eps, sys.bundle.base.retract(s.m_next, h * w)) -
                           sys.lagrangian(s.eps, sys.bundle.base.retract(s.m_next, -h * w))) /
                          (2.0 * h);
        worst = std::max(worst, rel_err(analytic, fd));
      }
    }
  }
  return worst;
}

DldpsSystem transport_system(const DldpsSystem& sys, const BundleSpec& target,
                             const DiffeoPair& maps, const std::vector<PathPair>& samples,
                             double roundtrip_tol) {
  for (const PathPair& s : samples) {
    const double te = max_abs(maps.inv_total(maps.fwd_total(s.eps)) - s.eps);
    const double tm = max_abs(maps.inv_base(maps.fwd_base(s.m_next)) - s.m_next);
    if (std::max(te, tm) > roundtrip_tol)
      throw InconsistentDiffeo(std::max(te, tm));
  }

  DldpsSystem out;
  out.bundle = target;
  out.var_dim = sys.var_dim;
  out.kin_dim = sys.kin_dim;

  const auto src = sys;  // value copy keeps the closure self-contained
  const auto m = maps;

  out.lagrangian = [src, m](const VectorXd& eps, const VectorXd& mm) {
    return src.lagrangian(m.inv_total(eps), m.inv_base(mm));
  };
  out.d1 = [src, m](const VectorXd& eps, const VectorXd& mm, const VectorXd& deps) {
    return src.d1(m.inv_total(eps), m.inv_base(mm), m.inv_diff(eps, deps));
  };
  if (m.inv_base_diff) {
    out.d2 = [src, m](const VectorXd& eps, const VectorXd& mm, const VectorXd& dm) {
      return src.d2(m.inv_total(eps), m.inv_base(mm), m.inv_base_diff(mm, dm));
    };
  } else {
    out.d2 = [src, m](const VectorXd& eps, const VectorXd& mm, const VectorXd& dm) {
      // Central FD through f^{-1}; the base maps in scope are affine, so
      // this is exact up to rounding.
      const double h = 1e-6;
      return (src.lagrangian(m.inv_total(eps), m.inv_base(mm + h * dm)) -
              src.lagrangian(m.inv_total(eps), m.inv_base(mm - h * dm))) /
             (2.0 * h);
    };
  }
  out.var_basis = [src, m](const VectorXd& eps, const VectorXd& mm) {
    const VectorXd e0 = m.inv_total(eps);
    auto basis = src.var_basis(e0, m.inv_base(mm));
    std::vector<VectorXd> image;
    image.reserve(basis.size());
    for (const VectorXd& v : basis) image.push_back(m.fwd_diff(e0, v));
    return image;
  };
  out.kin_residual = [src, m](const VectorXd& eps, const VectorXd& mm) {
    return src.kin_residual(m.inv_total(eps), m.inv_base(mm));
  };
  if (src.chain_map) {
    out.chain_map = [src, m](const PathPair& prev, const PathPair& cand,
                             const VectorXd& deps1) {
      PathPair p0{m.inv_total(prev.eps), m.inv_base(prev.m_next)};
      PathPair p1{m.inv_total(cand.eps), m.inv_base(cand.m_next)};
      const VectorXd pulled = src.chain_map(p0, p1, m.inv_diff(cand.eps, deps1));
      return m.fwd_diff(p0.eps, pulled);
    };
  }
  out.validate();
  return out;
}

}  // namespace nhreduce
