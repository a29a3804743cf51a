/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/geom.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "extcal/errors.hpp"

namespace extcal {

namespace {

constexpr double kOrthoTol = 1e-9;
constexpr double kSmallAngle = 1e-8;

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "rotation matrix has non-finite entries");
  }
  const double ortho = (m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (ortho > kOrthoTol || std::abs(det - 1.0) > kOrthoTol) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "matrix is not a proper rotation");
  }
  return Rotation(m);
}

Rotation Rotation::project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation(svd.matrixU() * d * svd.matrixV().transpose());
}

Rotation exp_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 k = skew(phi);
  if (theta < kSmallAngle) {
    return Rotation(Mat3::Identity() + k + 0.5 * k * k);
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Rotation(Mat3::Identity() + a * k + b * k * k);
}

Vec3 log_so3_vec(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta == 0.0) {
    return Vec3::Zero();
  }
  if (theta < kSmallAngle) {
    return 0.5 * vee(m - m.transpose());
  }
  if (c >= 0.0) {
    return theta / (2.0 * std::sin(theta)) * vee(m - m.transpose());
  }
  // theta / sin(theta) is ill-conditioned towards pi; read the axis off the
  // quaternion instead. R(q) turns by -2 atan2(|qv|, qs) about qv.
  const UnitQuaternion q = rotation_to_quat(r);
  const double n = q.vec().norm();
  return -2.0 * std::atan2(n, q.w()) * q.vec() / n;
}

Mat3 log_so3(const Rotation& r) { return skew(log_so3_vec(r)); }

double rotation_angle(const Rotation& r) {
  return std::acos(std::clamp(0.5 * (r.matrix().trace() - 1.0), -1.0, 1.0));
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
  return log_so3_vec(a.inverse() * b).norm();
}

UnitQuaternion::UnitQuaternion(double w, const Vec3& v) {
  const double n = std::sqrt(w * w + v.squaredNorm());
  if (!std::isfinite(n) || n == 0.0) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "quaternion must be finite and nonzero");
  }
  w_ = w / n;
  v_ = v / n;
}

UnitQuaternion UnitQuaternion::from_vector_first(const Vec4& q) {
  return UnitQuaternion(q(3), q.head<3>());
}

Vec4 UnitQuaternion::vector_first() const {
  Vec4 q;
  q << v_, w_;
  return q;
}

UnitQuaternion UnitQuaternion::canonical() const {
  if (w_ > 0.0) return *this;
  if (w_ < 0.0) return -*this;
  for (int i = 0; i < 3; ++i) {
    if (v_(i) != 0.0) return v_(i) > 0.0 ? *this : -*this;
  }
  return *this;
}

UnitQuaternion UnitQuaternion::operator-() const {
  UnitQuaternion q;
  q.w_ = -w_;
  q.v_ = -v_;
  return q;
}

UnitQuaternion UnitQuaternion::conjugate() const {
  UnitQuaternion q;
  q.w_ = w_;
  q.v_ = -v_;
  return q;
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& other) const {
  return from_vector_first(quat_left_matrix(*this) * other.vector_first());
}

Rotation quat_to_rotation(const UnitQuaternion& q) {
  const double qs = q.w();
  const Vec3& qv = q.vec();
  const Mat3 m = (qs * qs - qv.squaredNorm()) * Mat3::Identity() + 2.0 * qv * qv.transpose() -
                 2.0 * qs * skew(qv);
  return Rotation(m);
}

UnitQuaternion rotation_to_quat(const Rotation& r) {
  // Shepperd's method applied to R^T, whose standard (Hamilton) quaternion is
  // the quaternion of R under the convention of quat_to_rotation.
  const Mat3 m = r.matrix().transpose();
  const double tr = m.trace();
  double w = 0.0;
  Vec3 v;
  if (tr > m(0, 0) && tr > m(1, 1) && tr > m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + tr);
    w = 0.25 * s;
    v << (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
    w = (m(2, 1) - m(1, 2)) / s;
    v << 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) >= m(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2));
    w = (m(0, 2) - m(2, 0)) / s;
    v << (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1));
    w = (m(1, 0) - m(0, 1)) / s;
    v << (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s;
  }
  return UnitQuaternion(w, v).canonical();
}

Mat4 quat_left_matrix(const UnitQuaternion& q) {
  Mat4 l;
  l.topLeftCorner<3, 3>() = q.w() * Mat3::Identity() - skew(q.vec());
  l.topRightCorner<3, 1>() = q.vec();
  l.bottomLeftCorner<1, 3>() = -q.vec().transpose();
  l(3, 3) = q.w();
  return l;
}

Mat4 quat_right_matrix(const UnitQuaternion& q) {
  Mat4 r;
  r.topLeftCorner<3, 3>() = q.w() * Mat3::Identity() + skew(q.vec());
  r.topRightCorner<3, 1>() = q.vec();
  r.bottomLeftCorner<1, 3>() = -q.vec().transpose();
  r(3, 3) = q.w();
  return r;
}

Transform Transform::inverse() const {
  const Rotation rt = rotation.inverse();
  return Transform{rt, -(rt * translation)};
}

Transform Transform::operator*(const Transform& other) const {
  return Transform{rotation * other.rotation, rotation * other.translation + translation};
}

}  // namespace extcal
