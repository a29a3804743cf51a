/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <array>
#include <span>
#include <utility>

#include "extcal/geom.hpp"
#include "extcal/imu_preint.hpp"
#include "extcal/lsq.hpp"

namespace extcal::handeye {

/// Relative motions over the same time window satisfying A X = X B.
struct RelativePosePair {
  Transform motion_a;
  Transform motion_b;
};

struct HandEyeDiagnostics {
  double smallest_singular = 0.0;
  double second_smallest_singular = 0.0;
  double largest_singular = 0.0;
  int pair_count = 0;
};

struct RotationSolution {
  UnitQuaternion q;
  HandEyeDiagnostics diagnostics;
  Rotation rotation() const { return quat_to_rotation(q); }
};

struct TranslationSolution {
  Vec3 translation = Vec3::Zero();
  /// Axes along which (R_a - I) carries no information. Those coordinates are
  /// held at the centre of their bounds instead of being solved.
  std::array<bool, 3> unobservable{false, false, false};
  bool any_unobservable() const { return unobservable[0] || unobservable[1] || unobservable[2]; }
};

/// Second-smallest singular value below this fraction of the largest means the
/// stacked system has more than a one-dimensional nullspace.
inline constexpr double kDegeneracyRatio = 1e-3;

/// Relative motion from `prev` to `next`, expressed in `prev`: prev^-1 * next.
Transform relative_motion(const Transform& prev, const Transform& next);

/**
 * Rotation of X from A X = X B using stacked [L(q_a) - R(q_b)] q_x = 0 and the
 * right singular vector of the smallest singular value.
 *
 * Throws kInvalidArgument for fewer than 2 pairs, kDegenerateMotion when the
 * nullspace is not one-dimensional.
 */
RotationSolution solve_rotation_handeye(std::span<const RelativePosePair> pairs);

/// Same as above on quaternion pairs (q_a, q_b); each input is canonicalized,
/// so its sign does not matter.
RotationSolution solve_rotation_handeye(std::span<const std::pair<UnitQuaternion, UnitQuaternion>> pairs);

/**
 * Translation of X from (R_a - I) t = R* t_b - t_a, solved with box bounds.
 *
 * Axes that the rotations leave unconstrained (e.g. z under yaw-only motion)
 * are reported in the result and pinned to the bound centre. Throws
 * kSingularSystem when no axis is constrained (pure translation) or when the
 * unconstrained direction is not a coordinate axis.
 */
TranslationSolution solve_translation_handeye(std::span<const RelativePosePair> pairs,
                                              const Rotation& r_star, const lsq::Bounds& bounds);

/**
 * Rotation between a lidar and its embedded IMU: lidar motion between
 * consecutive poses is paired with the preintegrated gyro rotation over the
 * same window (gravity plays no part in the rotation).
 */
RotationSolution solve_lidar_imu_rotation(std::span<const std::pair<double, Transform>> lidar_poses,
                                          std::span<const ImuSample> imu);

}  // namespace extcal::handeye
