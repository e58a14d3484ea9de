#include "nhreduce/matgroup.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace nhreduce {

Mat3 hat(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

So3Element::So3Element(const Mat3& mat, double tau_orth) : mat_(mat) {
  const double defect = so3_defect(mat);
  if (defect > tau_orth)
    throw Error("not a rotation matrix (defect " + std::to_string(defect) + ")");
}

Vec3 vee(const Mat3& skew, double tol) {
  const double sym = 0.5 * (skew + skew.transpose()).cwiseAbs().maxCoeff();
  if (sym > tol) throw NonSkewInput(sym);
  return Vec3(skew(2, 1), skew(0, 2), skew(1, 0));
}

Mat3 cay_skew(const Mat3& skew) {
  const Mat3 a = Mat3::Identity() + 0.5 * skew;
  const Mat3 b = Mat3::Identity() - 0.5 * skew;
  return a * b.inverse();
}

Mat3 cay(const Vec3& omega) { return cay_skew(hat(omega)); }

double rotation_angle(const Mat3& W) {
  const double c = std::clamp(0.5 * (W.trace() - 1.0), -1.0, 1.0);
  return std::acos(c);
}

Mat3 cay_inv(const Mat3& W, double angle_margin) {
  const double angle = rotation_angle(W);
  if (angle > M_PI - angle_margin) throw AngleAtPi(angle);
  const Mat3 raw = 2.0 * (W - Mat3::Identity()) * (W + Mat3::Identity()).inverse();
  return 0.5 * (raw - raw.transpose());  // exact skew part
}

double trace_pairing(const Mat3& a, const Mat3& b) {
  return 0.5 * (a * b.transpose()).trace();
}

Mat3 ad_star(const Mat3& W, const Mat3& p) {
  const Mat3 raw = W.transpose() * p * W;
  return 0.5 * (raw - raw.transpose());
}

Mat3 project_to_so3(const Mat3& g) {
  Eigen::JacobiSVD<Mat3> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

double so3_defect(const Mat3& g) {
  const double orth = (g.transpose() * g - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(g.determinant() - 1.0);
  return std::max(orth, det);
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  const Vec3 n = axis.normalized();
  const Mat3 k = hat(n);
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

ConstraintSubspace::ConstraintSubspace(const std::vector<Vec3>& spanning) {
  // Gram-Schmidt on vee coordinates; the trace pairing of hats equals the
  // Euclidean dot product, so this orthonormalizes under the trace pairing.
  for (const Vec3& v : spanning) {
    Vec3 u = v;
    for (const Vec3& b : basis_) u -= u.dot(b) * b;
    if (u.norm() < 1e-12)
      throw Error("constraint subspace: spanning vectors not independent");
    basis_.push_back(u / u.norm());
  }
  // Complement under the same pairing.
  const Mat3 id = Mat3::Identity();
  for (int i = 0; i < 3; ++i) {
    Vec3 u = id.col(i);
    for (const Vec3& b : basis_) u -= u.dot(b) * b;
    for (const Vec3& b : annihilator_) u -= u.dot(b) * b;
    if (u.norm() > 1e-12) annihilator_.push_back(u / u.norm());
  }
  if (static_cast<int>(basis_.size() + annihilator_.size()) != 3)
    throw Error("constraint subspace: dimension mismatch");
  for (const Vec3& b : basis_)
    for (const Vec3& a : annihilator_)
      if (std::abs(trace_pairing(hat(b), hat(a))) > 1e-14)
        throw Error("constraint subspace: annihilator not orthogonal");
}

Eigen::VectorXd ConstraintSubspace::project_onto(const Mat3& a) const {
  Eigen::VectorXd c(dim());
  for (int i = 0; i < dim(); ++i)
    c[i] = trace_pairing(a, hat(basis_[static_cast<size_t>(i)]));
  return c;
}

double ConstraintSubspace::complement_norm(const Mat3& a) const {
  double m = 0.0;
  for (const Vec3& b : annihilator_)
    m = std::max(m, std::abs(trace_pairing(a, hat(b))));
  return m;
}

Eigen::VectorXd flatten(const Mat3& m) {
  Eigen::VectorXd v(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[3 * r + c] = m(r, c);
  return v;
}

Mat3 unflatten(const Eigen::VectorXd& v) {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[3 * r + c];
  return m;
}

}  // namespace nhreduce
