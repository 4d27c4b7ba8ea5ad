#pragma once

// Hat map, SO(3) checks and the exponential map used for attitude updates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdv {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

inline constexpr double kRotationTolerance = 1e-9;

/// Skew-symmetric matrix with hat(v) * w == v.cross(w).
template <typename Derived>
Mat3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  Mat3<S> m;
  m << S(0), -v(2), v(1),
       v(2), S(0), -v(0),
       -v(1), v(0), S(0);
  return m;
}

template <typename Derived>
Vec3<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

template <typename Scalar>
Scalar orthogonality_error(const Mat3<Scalar>& r) {
  return (r.transpose() * r - Mat3<Scalar>::Identity()).norm();
}

template <typename Scalar>
bool is_rotation(const Mat3<Scalar>& r, Scalar tol = Scalar(kRotationTolerance)) {
  if (!r.allFinite()) return false;
  return orthogonality_error(r) <= tol && std::abs(r.determinant() - Scalar(1)) <= tol;
}

/// Rodrigues formula. Below |w| = 1e-6 the trigonometric coefficients are
/// replaced by their Taylor series.
template <typename Derived>
Mat3<typename Derived::Scalar> so3_exp(const Eigen::MatrixBase<Derived>& w) {
  using S = typename Derived::Scalar;
  const S theta2 = w.squaredNorm();
  const S theta = std::sqrt(theta2);
  S a, b;
  if (theta < S(1e-6)) {
    a = S(1) - theta2 / S(6);
    b = S(0.5) - theta2 / S(24);
  } else {
    a = std::sin(theta) / theta;
    b = (S(1) - std::cos(theta)) / theta2;
  }
  const Mat3<S> k = hat(w);
  return Mat3<S>::Identity() + a * k + b * k * k;
}

/// Rotation vector of r (inverse of so3_exp on angles in [0, pi)).
template <typename Scalar>
Vec3<Scalar> so3_log(const Mat3<Scalar>& r) {
  const Scalar c = std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Scalar theta = std::acos(c);
  const Vec3<Scalar> axis = vee(r - r.transpose());
  if (theta < Scalar(1e-6)) return axis / Scalar(2);
  return axis * (theta / (Scalar(2) * std::sin(theta)));
}

/// Nearest rotation in the Frobenius sense (orthogonal polar factor).
template <typename Scalar>
Mat3<Scalar> reorthonormalize(const Mat3<Scalar>& r) {
  if (!r.allFinite()) throw std::domain_error("reorthonormalize: non-finite matrix");
  Eigen::JacobiSVD<Mat3<Scalar>> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3<Scalar> q = svd.matrixU() * svd.matrixV().transpose();
  if (q.determinant() <= Scalar(0)) {
    throw std::domain_error("reorthonormalize: projection has non-positive determinant");
  }
  return q;
}

}  // namespace rdv
