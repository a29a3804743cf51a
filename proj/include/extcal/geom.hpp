/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

namespace extcal {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

class UnitQuaternion;

/// Cross-product matrix: skew(v) * w == v.cross(w).
Mat3 skew(const Vec3& v);

/**
 * Element of SO(3). The only ways to obtain one are the checked factory,
 * the exponential map, the quaternion conversion and composition, so every
 * instance satisfies |R R^T - I|_inf < 1e-9 and det(R) = +1.
 */
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Throws kInvalidArgument if `m` is not orthonormal with det +1 (tolerance 1e-9).
  static Rotation from_matrix(const Mat3& m);

  /// Nearest rotation in the Frobenius sense (SVD projection).
  static Rotation project(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  bool operator==(const Rotation& other) const { return m_ == other.m_; }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  friend Rotation exp_so3(const Vec3& phi);
  friend Rotation quat_to_rotation(const UnitQuaternion& q);

  Mat3 m_;
};

/// Rodrigues formula; second-order Taylor expansion below |phi| = 1e-8.
Rotation exp_so3(const Vec3& phi);

/// Matrix logarithm as a 3x3 skew matrix. Uses (theta / 2 sin theta)(R - R^T)
/// away from pi and a quaternion-based axis extraction near pi.
Mat3 log_so3(const Rotation& r);

/// Axis-angle vector of log_so3: exp_so3(log_so3_vec(R)) == R.
Vec3 log_so3_vec(const Rotation& r);

/// Rotation angle in [0, pi].
double rotation_angle(const Rotation& r);

/// Angle of a^-1 b in radians.
double geodesic_distance(const Rotation& a, const Rotation& b);

/**
 * Unit quaternion, stored scalar-first.
 *
 * The algebra follows the convention in which
 *   R(q) = (qs^2 - qv.qv) I + 2 qv qv^T - 2 qs [qv]x
 * and the product is p (x) q = L(p) [qv; qs], with
 *   L(p) = [ ps I - [pv]x   pv ]      R(p) = [ ps I + [pv]x   pv ]
 *          [   -pv^T        ps ]             [   -pv^T        ps ]
 * on vector-first 4-vectors. Under this convention R(p (x) q) = R(p) R(q).
 * Note that R(q) for q = (cos a/2, sin a/2 k) rotates by -a about k.
 */
class UnitQuaternion {
 public:
  UnitQuaternion() : w_(1.0), v_(Vec3::Zero()) {}
  /// Normalizes the input; throws kInvalidArgument on a zero or non-finite vector.
  UnitQuaternion(double w, const Vec3& v);

  static UnitQuaternion identity() { return UnitQuaternion(); }
  /// From the 4-vector layout [qv; qs].
  static UnitQuaternion from_vector_first(const Vec4& q);

  double w() const { return w_; }
  const Vec3& vec() const { return v_; }

  /// [qv; qs]
  Vec4 vector_first() const;

  /// Sign chosen so that w >= 0 (first nonzero vector component > 0 when w == 0).
  UnitQuaternion canonical() const;
  UnitQuaternion operator-() const;
  UnitQuaternion conjugate() const;
  UnitQuaternion operator*(const UnitQuaternion& other) const;

 private:
  double w_;
  Vec3 v_;
};

/// Rotation matrix of q under the convention above; even in q.
Rotation quat_to_rotation(const UnitQuaternion& q);

/// Inverse of quat_to_rotation, canonicalized (w >= 0).
UnitQuaternion rotation_to_quat(const Rotation& r);

Mat4 quat_left_matrix(const UnitQuaternion& q);
Mat4 quat_right_matrix(const UnitQuaternion& q);

/// Rigid transform x -> R x + t.
struct Transform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Transform identity() { return Transform{}; }

  Transform inverse() const;
  Transform operator*(const Transform& other) const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  bool operator==(const Transform& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

inline Transform compose(const Transform& a, const Transform& b) { return a * b; }
inline Transform inverse(const Transform& a) { return a.inverse(); }

}  // namespace extcal
