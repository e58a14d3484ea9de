#include "nhreduce/llreduce.hpp"

#include <algorithm>
#include <cmath>

namespace nhreduce {

namespace {

/// Skew matrix S with <S, xi^> = d ell_d(W)(xi^ W) for all xi (the
/// right-translation pullback R*_W of d ell_d, identified via the pairing).
Mat3 right_pullback(const LlSystemSpec& spec, const Mat3& w) {
  Mat3 s = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    const Mat3 e = hat(Vec3::Unit(i));
    s += spec.reduced_ell_diff(w, e * w) * e;
  }
  return s;
}

/// Skew matrix T with <T, xi^> = d ell_d(W)(W xi^) (the pullback L*_W).
Mat3 left_pullback(const LlSystemSpec& spec, const Mat3& w) {
  Mat3 t = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    const Mat3 e = hat(Vec3::Unit(i));
    t += spec.reduced_ell_diff(w, w * e) * e;
  }
  return t;
}

Mat3 legendre_of(const LlSystemSpec& spec, const Mat3& w) {
  return spec.legendre ? spec.legendre(w) : right_pullback(spec, w);
}

Mat3 legendre_diff_of(const LlSystemSpec& spec, const Mat3& w, const Mat3& dw) {
  if (spec.legendre_diff) return spec.legendre_diff(w, dw);
  const double h = 1e-6;
  const Mat3 lp = right_pullback(spec, w + h * dw);
  const Mat3 lm = right_pullback(spec, w - h * dw);
  return (lp - lm) / (2.0 * h);
}

}  // namespace

DldpsSystem build_m_ll(const LlSystemSpec& spec) {
  DldpsSystem sys;
  sys.bundle.total = so3_manifold();
  sys.bundle.base = so3_manifold();
  sys.bundle.phi = [](const VectorXd& eps) { return eps; };
  sys.bundle.phi_diff = [](const VectorXd&, const VectorXd& d) { return d; };
  sys.bundle.fiber_chart_dim = 0;
  sys.bundle.fiber_retract = [](const VectorXd& eps, const VectorXd&) { return eps; };

  sys.lagrangian = [spec](const VectorXd& eps, const VectorXd& m) {
    return spec.lagrangian(unflatten(eps), unflatten(m));
  };
  sys.d1 = [spec](const VectorXd& eps, const VectorXd& m, const VectorXd& d) {
    return spec.d1(unflatten(eps), unflatten(m), unflatten(d));
  };
  sys.d2 = [spec](const VectorXd& eps, const VectorXd& m, const VectorXd& d) {
    return spec.d2(unflatten(eps), unflatten(m), unflatten(d));
  };
  sys.var_basis = [spec](const VectorXd& eps, const VectorXd&) {
    const Mat3 g0 = unflatten(eps);
    std::vector<VectorXd> basis;
    for (int i = 0; i < spec.d.dim(); ++i) basis.push_back(flatten(g0 * spec.d.basis_mat(i)));
    return basis;
  };
  sys.kin_residual = [spec](const VectorXd& eps, const VectorXd& m) {
    return spec.sd_residual(unflatten(eps).transpose() * unflatten(m));
  };
  sys.chain_map = [](const PathPair&, const PathPair&, const VectorXd&) {
    return VectorXd(VectorXd::Zero(9));
  };
  sys.var_dim = spec.d.dim();
  sys.kin_dim = spec.sd_dim;
  sys.validate();
  return sys;
}

DldpsSystem reduce_to_eta(const LlSystemSpec& spec) {
  DldpsSystem sys;
  sys.bundle.total = so3_manifold();
  sys.bundle.base = point_manifold();
  sys.bundle.phi = [](const VectorXd&) { return VectorXd(0); };
  sys.bundle.phi_diff = [](const VectorXd&, const VectorXd&) { return VectorXd(0); };
  sys.bundle.fiber_chart_dim = 3;
  sys.bundle.fiber_retract = sys.bundle.total.retract;

  sys.lagrangian = [spec](const VectorXd& eps, const VectorXd&) {
    return spec.reduced_ell(unflatten(eps));
  };
  sys.d1 = [spec](const VectorXd& eps, const VectorXd&, const VectorXd& d) {
    return spec.reduced_ell_diff(unflatten(eps), unflatten(d));
  };
  sys.d2 = [](const VectorXd&, const VectorXd&, const VectorXd&) { return 0.0; };
  sys.var_basis = [spec](const VectorXd& eps, const VectorXd&) {
    const Mat3 w = unflatten(eps);
    std::vector<VectorXd> basis;
    for (int i = 0; i < spec.d.dim(); ++i) basis.push_back(flatten(spec.d.basis_mat(i) * w));
    return basis;
  };
  sys.kin_residual = [spec](const VectorXd& eps, const VectorXd&) {
    return spec.sd_residual(unflatten(eps));
  };
  sys.chain_map = [](const PathPair& prev, const PathPair& cand, const VectorXd& d) {
    const Mat3 w0 = unflatten(prev.eps);
    const Mat3 w1 = unflatten(cand.eps);
    return flatten(-w0 * unflatten(d) * w1.transpose());
  };
  sys.var_dim = spec.d.dim();
  sys.kin_dim = spec.sd_dim;
  sys.validate();
  return sys;
}

Mat3 eta_residual(const LlSystemSpec& spec, const Mat3& w0, const Mat3& w1) {
  return right_pullback(spec, w1) - left_pullback(spec, w0);
}

Mat3 reduced_legendre(const LlSystemSpec& spec, const Mat3& w) {
  return right_pullback(spec, w);
}

Mat3 reduced_legendre_diff(const LlSystemSpec& spec, const Mat3& w, const Mat3& dw) {
  return legendre_diff_of(spec, w, dw);
}

Mat3 invert_legendre(const LlSystemSpec& spec, const Mat3& p, const Mat3& seed,
                     double tol, int max_iter, double chart_radius) {
  Mat3 w = seed;
  VectorXd r = flatten(legendre_of(spec, w) - p);
  double rnorm = r.cwiseAbs().maxCoeff();

  for (int iter = 0; iter < max_iter; ++iter) {
    if (rnorm <= tol) return w;
    if (rotation_angle(seed.transpose() * w) > chart_radius)
      throw NoConvergence(iter, rnorm, "invert_legendre left the seed chart");

    Mat3 jac;  // columns: vee of dL(W)(W e_j^)
    for (int j = 0; j < 3; ++j) {
      const Mat3 d = legendre_diff_of(spec, w, w * hat(Vec3::Unit(j)));
      jac.col(j) = vee(0.5 * (d - d.transpose()), 1e-6);
    }
    Eigen::JacobiSVD<Mat3> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double smin = svd.singularValues()[2];
    if (smin <= 0.0 || svd.singularValues()[0] / smin > 1e12)
      throw NearSingularLegendre(smin > 0.0 ? svd.singularValues()[0] / smin
                                            : std::numeric_limits<double>::infinity());

    const Mat3 gap = legendre_of(spec, w) - p;
    const Vec3 delta = svd.solve(Vec3(-vee(0.5 * (gap - gap.transpose()), 1e-6)));

    double scale = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= 30; ++halvings) {
      const Mat3 w_next = w * cay(Vec3(scale * delta));
      const VectorXd rn = flatten(legendre_of(spec, w_next) - p);
      const double rn_norm = rn.cwiseAbs().maxCoeff();
      if (rn_norm < rnorm || rn_norm <= tol) {
        w = w_next;
        rnorm = rn_norm;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) throw NoConvergence(iter + 1, rnorm, "invert_legendre damping");
  }
  if (rnorm <= tol) return w;
  throw NoConvergence(max_iter, rnorm, "invert_legendre");
}

DldpsSystem build_m_s(const LlSystemSpec& spec) {
  const DldpsSystem eta = reduce_to_eta(spec);

  BundleSpec target;
  target.total = euclidean_manifold(3);
  target.base = point_manifold();
  target.phi = [](const VectorXd&) { return VectorXd(0); };
  target.phi_diff = [](const VectorXd&, const VectorXd&) { return VectorXd(0); };
  target.fiber_chart_dim = 3;
  target.fiber_retract = target.total.retract;

  DiffeoPair maps;
  maps.fwd_total = [spec](const VectorXd& eps) {
    return VectorXd(vee(legendre_of(spec, unflatten(eps))));
  };
  maps.inv_total = [spec](const VectorXd& p) {
    return flatten(invert_legendre(spec, hat(Vec3(p))));
  };
  maps.fwd_base = [](const VectorXd&) { return VectorXd(0); };
  maps.inv_base = [](const VectorXd&) { return VectorXd(0); };
  maps.inv_base_diff = [](const VectorXd&, const VectorXd&) { return VectorXd(0); };
  maps.fwd_diff = [spec](const VectorXd& eps, const VectorXd& d) {
    const Mat3 dl = legendre_diff_of(spec, unflatten(eps), unflatten(d));
    return VectorXd(vee(0.5 * (dl - dl.transpose())));
  };
  maps.inv_diff = [spec](const VectorXd& p, const VectorXd& dp) {
    const Mat3 w = invert_legendre(spec, hat(Vec3(p)));
    Mat3 jac;
    for (int j = 0; j < 3; ++j) {
      const Mat3 d = legendre_diff_of(spec, w, w * hat(Vec3::Unit(j)));
      jac.col(j) = vee(0.5 * (d - d.transpose()), 1e-6);
    }
    const Vec3 c = jac.fullPivLu().solve(Vec3(dp));
    Mat3 dw = Mat3::Zero();
    for (int j = 0; j < 3; ++j) dw += c[j] * w * hat(Vec3::Unit(j));
    return flatten(dw);
  };

  std::vector<PathPair> samples;
  const Vec3 sample_omegas[] = {Vec3(0.1, 0.2, -0.1), Vec3(-0.3, 0.1, 0.2),
                                Vec3(0.05, -0.15, 0.3), Vec3(0.25, 0.0, -0.2)};
  for (const Vec3& w : sample_omegas)
    samples.push_back(PathPair{flatten(cay(w)), VectorXd(0)});

  DldpsSystem sys = transport_system(eta, target, maps, samples);

  // Step by the two d-chart parameters of W = cay(omega), which keeps the
  // new momentum in L(S_d) by construction.
  sys.custom_step = [spec](const DldpsSystem&, const PathPair& prev,
                           const PathPair&, double tol, int max_iter) {
    const Mat3 p_k = hat(Vec3(prev.eps));
    const Mat3 w_k = invert_legendre(spec, p_k);
    const Mat3 target_p = ad_star(w_k, p_k);

    const int nd = spec.d.dim();
    const auto chart_w = [&](const VectorXd& c) {
      Vec3 omega = Vec3::Zero();
      for (int i = 0; i < nd; ++i)
        omega += c[i] * spec.d.basis()[static_cast<size_t>(i)];
      return cay(omega);
    };
    const auto residual = [&](const VectorXd& c) {
      return VectorXd(spec.d.project_onto(legendre_of(spec, chart_w(c)) - target_p));
    };

    VectorXd c = spec.d.project_onto(cay_inv(w_k));  // steady-rotation guess
    VectorXd r = residual(c);
    double rnorm = r.cwiseAbs().maxCoeff();
    const double fd = 1e-7;
    for (int iter = 0; iter < max_iter; ++iter) {
      if (rnorm <= tol)
        return PathPair{VectorXd(vee(legendre_of(spec, chart_w(c)))), VectorXd(0)};
      MatrixXd jac(nd, nd);
      for (int j = 0; j < nd; ++j) {
        VectorXd cp = c, cm = c;
        cp[j] += fd;
        cm[j] -= fd;
        jac.col(j) = (residual(cp) - residual(cm)) / (2.0 * fd);
      }
      const VectorXd delta = jac.fullPivLu().solve(-r);
      double scale = 1.0;
      bool accepted = false;
      for (int halvings = 0; halvings <= 30; ++halvings) {
        const VectorXd cn = c + scale * delta;
        const VectorXd rn = residual(cn);
        if (rn.cwiseAbs().maxCoeff() < rnorm || rn.cwiseAbs().maxCoeff() <= tol) {
          c = cn;
          r = rn;
          rnorm = r.cwiseAbs().maxCoeff();
          accepted = true;
          break;
        }
        scale *= 0.5;
      }
      if (!accepted) throw NoConvergence(iter + 1, rnorm, "momentum step damping");
    }
    if (rnorm <= tol)
      return PathPair{VectorXd(vee(legendre_of(spec, chart_w(c)))), VectorXd(0)};
    throw NoConvergence(max_iter, rnorm, "momentum step");
  };
  return sys;
}

VectorXd eps_residual(const LlSystemSpec& spec, const Mat3& p_k, const Mat3& p_k1,
                      const Mat3& seed) {
  const Mat3 w_k = invert_legendre(spec, p_k, seed);
  return spec.d.project_onto(p_k1 - ad_star(w_k, p_k));
}

DiscretePath reconstruct(const So3Connection& conn, const DiscretePath& reduced,
                         const Mat3& g0) {
  return upsilon_ll(conn).lift(flatten(So3Element(g0).mat()), reduced);
}

double momentum_map(const LlSystemSpec& spec, const Mat3& g0, const Mat3& g1,
                    const Vec3& xi, bool use_d2_form, double membership_tol) {
  const Mat3 xi_hat = hat(xi);
  const Mat3 eta = g0.transpose() * xi_hat * g0;  // Ad_{g0^{-1}}(xi)
  const double defect = spec.d.complement_norm(0.5 * (eta - eta.transpose()));
  if (defect > membership_tol) throw NotInGD(defect);
  if (use_d2_form) return spec.d2(g0, g1, xi_hat * g1);
  return -spec.d1(g0, g1, xi_hat * g0);
}

std::vector<double> momentum_evolution_check(const LlSystemSpec& spec,
                                             const DiscretePath& full_path,
                                             const Vec3& eta) {
  std::vector<double> residuals;
  for (int k = 1; k < full_path.size(); ++k) {
    const Mat3 g_prev = unflatten(full_path.pairs[static_cast<size_t>(k - 1)].eps);
    const Mat3 g_k = unflatten(full_path.pairs[static_cast<size_t>(k)].eps);
    const Mat3 g_k1 = unflatten(full_path.pairs[static_cast<size_t>(k)].m_next);
    const Mat3 xi_hat = g_k * hat(eta) * g_k.transpose();  // section Ad_{g_k}(eta)
    const double j_now = -spec.d1(g_k, g_k1, xi_hat * g_k);
    const double j_prev = spec.d2(g_prev, g_k, xi_hat * g_k);  // P = 0 here
    residuals.push_back(j_now - j_prev);
  }
  return residuals;
}

DldpsSystem eta_system_for_connection(const LlSystemSpec& spec, const Mat3& h) {
  const DldpsSystem eta = reduce_to_eta(spec);
  BundleSpec target = eta.bundle;

  DiffeoPair maps;
  maps.fwd_total = [h](const VectorXd& eps) {
    return flatten(unflatten(eps) * h.transpose());
  };
  maps.inv_total = [h](const VectorXd& eps) { return flatten(unflatten(eps) * h); };
  maps.fwd_base = [](const VectorXd&) { return VectorXd(0); };
  maps.inv_base = [](const VectorXd&) { return VectorXd(0); };
  maps.inv_base_diff = [](const VectorXd&, const VectorXd&) { return VectorXd(0); };
  maps.fwd_diff = [h](const VectorXd&, const VectorXd& d) {
    return flatten(unflatten(d) * h.transpose());
  };
  maps.inv_diff = [h](const VectorXd&, const VectorXd& d) {
    return flatten(unflatten(d) * h);
  };

  std::vector<PathPair> samples;
  const Vec3 sample_omegas[] = {Vec3(0.2, -0.1, 0.3), Vec3(-0.15, 0.25, 0.05)};
  for (const Vec3& w : sample_omegas)
    samples.push_back(PathPair{flatten(cay(w)), VectorXd(0)});
  return transport_system(eta, target, maps, samples);
}

ConnectionIndependenceReport connection_independence_check(
    const LlSystemSpec& spec, const Mat3& h, const DiscretePath& full_path,
    double tol) {
  ConnectionIndependenceReport rep;
  const ReductionMap proj_e = upsilon_ll(canonical_group_connection());
  const ReductionMap proj_h = upsilon_ll(canonical_group_connection(h));

  DiscretePath w_path, v_path;
  for (const PathPair& pair : full_path.pairs) {
    w_path.pairs.push_back(proj_e.forward(pair));
    v_path.pairs.push_back(proj_h.forward(pair));
    const Mat3 w = unflatten(w_path.pairs.back().eps);
    const Mat3 v = unflatten(v_path.pairs.back().eps);
    rep.max_translation_mismatch = std::max(
        rep.max_translation_mismatch, (v - w * h.transpose()).cwiseAbs().maxCoeff());
  }

  const TrajectoryReport wr = verify_trajectory(reduce_to_eta(spec), w_path, tol);
  rep.max_residual_e = std::max(wr.max_dynamic, wr.max_kinematic);
  const TrajectoryReport vr =
      verify_trajectory(eta_system_for_connection(spec, h), v_path, tol);
  rep.max_residual_h = std::max(vr.max_dynamic, vr.max_kinematic);
  rep.pass = rep.max_translation_mismatch <= 1e-10 && rep.max_residual_e <= tol &&
             rep.max_residual_h <= tol;
  return rep;
}

}  // namespace nhreduce
