#pragma once

// Matrix Lie group/algebra kernel for SO(3) and abelian translation groups:
// hat/vee, Cayley maps, adjoint operations, trace pairing, constraint
// subspaces and projectors.

#include <Eigen/Dense>
#include <vector>

#include "nhreduce/errors.hpp"

namespace nhreduce {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

/// hat: R^3 -> so(3), hat(a)*b = a x b.
Mat3 hat(const Vec3& omega);

/// Validated rotation matrix. Construction checks orthogonality and
/// determinant against the configurable tolerance.
class So3Element {
 public:
  explicit So3Element(const Mat3& mat, double tau_orth = 1e-10);
  const Mat3& mat() const { return mat_; }

 private:
  Mat3 mat_;
};

/// Algebra vector together with its derived skew matrix; the skew part is
/// exact by construction and vee(skew()) returns omega() exactly.
class So3AlgebraElement {
 public:
  explicit So3AlgebraElement(const Vec3& omega) : omega_(omega), skew_(hat(omega)) {}
  const Vec3& omega() const { return omega_; }
  const Mat3& skew() const { return skew_; }

 private:
  Vec3 omega_;
  Mat3 skew_;
};

/// vee: so(3) -> R^3, inverse of hat. Rejects inputs whose symmetric part
/// exceeds `tol`.
Vec3 vee(const Mat3& skew, double tol = 1e-12);

/// Cayley transform cay(w) = (1 + w/2)(1 - w/2)^{-1}, w a skew matrix.
Mat3 cay_skew(const Mat3& skew);
Mat3 cay(const Vec3& omega);

/// Inverse Cayley transform 2(W - 1)(W + 1)^{-1}. Throws AngleAtPi when the
/// rotation angle of W exceeds pi - angle_margin.
Mat3 cay_inv(const Mat3& W, double angle_margin = 1e-6);

/// Rotation angle of W in [0, pi].
double rotation_angle(const Mat3& W);

/// Inner product <A,B> = 1/2 tr(A B^t); on skew matrices it equals the
/// Euclidean dot product of the vee images.
double trace_pairing(const Mat3& a, const Mat3& b);

/// Coadjoint action on so(3)* (identified with so(3) by the trace pairing):
/// Ad*_W(p) = skew part of W^t p W.
Mat3 ad_star(const Mat3& W, const Mat3& p);

/// Nearest rotation matrix (polar decomposition via SVD).
Mat3 project_to_so3(const Mat3& g);

/// Orthogonality + determinant defect of g, max-norm.
double so3_defect(const Mat3& g);

/// Rotation about a unit axis by an angle (Rodrigues); independent of cay,
/// used as an oracle construction.
Mat3 axis_angle(const Vec3& axis, double angle);

/// A subspace of so(3) together with its trace-pairing orthogonal complement.
/// The basis is orthonormalized at construction; checked invariants:
/// independence, pairing of basis with annihilator below 1e-14, and
/// dim(basis) + dim(annihilator) = 3.
class ConstraintSubspace {
 public:
  explicit ConstraintSubspace(const std::vector<Vec3>& spanning);

  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Vec3>& basis() const { return basis_; }
  const std::vector<Vec3>& annihilator_basis() const { return annihilator_; }

  Mat3 basis_mat(int i) const { return hat(basis_[static_cast<size_t>(i)]); }

  /// Pairing coefficients of A against the orthonormal basis; A lies in the
  /// annihilator iff all coefficients vanish.
  Eigen::VectorXd project_onto(const Mat3& a) const;

  /// Max |coefficient| of A against the annihilator basis; zero iff A lies
  /// in the subspace.
  double complement_norm(const Mat3& a) const;

 private:
  std::vector<Vec3> basis_;
  std::vector<Vec3> annihilator_;
};

/// Row-major flattening between 3x3 matrices and R^9 point coordinates.
Eigen::VectorXd flatten(const Mat3& m);
Mat3 unflatten(const Eigen::VectorXd& v);

}  // namespace nhreduce
