#include "nhreduce/suslov.hpp"

#include <Eigen/Eigenvalues>

namespace nhreduce {

Mat3 InertiaParams::inertia() const {
  Mat3 m;
  m << i11, 0.0, i13,
       0.0, i22, i23,
       i13, i23, i33;
  return m;
}

void InertiaParams::validate() const {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia());
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw InvalidInertia("not positive definite");
}

Mat3 mass_tensor(const InertiaParams& params) {
  params.validate();
  return mass_tensor(params.inertia());
}

Mat3 mass_tensor(const Mat3& inertia) {
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidInertia("not symmetric");
  if (std::abs(inertia(0, 1)) > 0.0) throw InvalidInertia("I12 != 0");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw InvalidInertia("not positive definite");

  const double i11 = inertia(0, 0), i22 = inertia(1, 1), i33 = inertia(2, 2);
  Mat3 j;
  j << 0.5 * (i22 + i33 - i11), 0.0, -inertia(0, 2),
       0.0, 0.5 * (i11 + i33 - i22), -inertia(1, 2),
       -inertia(0, 2), -inertia(1, 2), 0.5 * (i11 + i22 - i33);
  return j;
}

double suslov_lagrangian(const Mat3& j, const Mat3& g0, const Mat3& g1) {
  return -(g1 * j * g0.transpose()).trace();
}

double suslov_d1(const Mat3& j, const Mat3& g0, const Mat3& g1, const Mat3& dg0) {
  (void)g0;  // L_d is linear in g0
  return -(g1 * j * dg0.transpose()).trace();
}

double suslov_d2(const Mat3& j, const Mat3& g0, const Mat3& g1, const Mat3& dg1) {
  (void)g1;
  return -(dg1 * j * g0.transpose()).trace();
}

double suslov_sd_residual(const Mat3& w) { return vee(cay_inv(w)).z(); }

Mat3 suslov_legendre(const Mat3& j, const Mat3& w) {
  return w * j - j * w.transpose();
}

LlSystemSpec build_suslov_spec(const InertiaParams& params) {
  const Mat3 j = mass_tensor(params);

  LlSystemSpec spec{
      /*lagrangian=*/[j](const Mat3& g0, const Mat3& g1) { return suslov_lagrangian(j, g0, g1); },
      /*d1=*/[j](const Mat3& g0, const Mat3& g1, const Mat3& d) { return suslov_d1(j, g0, g1, d); },
      /*d2=*/[j](const Mat3& g0, const Mat3& g1, const Mat3& d) { return suslov_d2(j, g0, g1, d); },
      /*d=*/ConstraintSubspace({Vec3::UnitX(), Vec3::UnitY()}),
      /*sd_residual=*/[](const Mat3& w) {
        VectorXd r(1);
        r[0] = suslov_sd_residual(w);
        return r;
      },
      /*sd_dim=*/1,
      /*legendre=*/nullptr,
      /*legendre_diff=*/nullptr};

  spec.legendre = [j](const Mat3& w) { return suslov_legendre(j, w); };
  spec.legendre_diff = [j](const Mat3&, const Mat3& dw) {
    return Mat3(dw * j - j * dw.transpose());  // L is linear in W
  };
  return spec;
}

DldpsSystem build_suslov(SuslovLevel level, const InertiaParams& params) {
  const LlSystemSpec spec = build_suslov_spec(params);
  switch (level) {
    case SuslovLevel::full: return build_m_ll(spec);
    case SuslovLevel::eta: return reduce_to_eta(spec);
    case SuslovLevel::momentum: return build_m_s(spec);
  }
  throw Error("unknown suslov level");
}

PathPair suslov_initial(SuslovLevel level, const InertiaParams& params,
                        double w1, double w2, const Mat3& g0) {
  const Mat3 w0 = cay(Vec3(w1, w2, 0.0));
  switch (level) {
    case SuslovLevel::full:
      return PathPair{flatten(g0), flatten(g0 * w0)};
    case SuslovLevel::eta:
      return PathPair{flatten(w0), VectorXd(0)};
    case SuslovLevel::momentum:
      return PathPair{VectorXd(vee(suslov_legendre(mass_tensor(params), w0))),
                      VectorXd(0)};
  }
  throw Error("unknown suslov level");
}

}  // namespace nhreduce
