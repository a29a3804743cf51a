/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/handeye.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "extcal/errors.hpp"

namespace extcal::handeye {

Transform relative_motion(const Transform& prev, const Transform& next) { return prev.inverse() * next; }

RotationSolution solve_rotation_handeye(std::span<const std::pair<UnitQuaternion, UnitQuaternion>> pairs) {
  if (pairs.size() < 2) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "rotation hand-eye needs at least 2 pairs");
  }
  Eigen::MatrixXd a(4 * static_cast<Eigen::Index>(pairs.size()), 4);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    // Both sides share the scalar part up to sign once canonicalized.
    const UnitQuaternion qa = pairs[k].first.canonical();
    const UnitQuaternion qb = pairs[k].second.canonical();
    a.middleRows<4>(4 * static_cast<Eigen::Index>(k)) = quat_left_matrix(qa) - quat_right_matrix(qb);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d s = svd.singularValues();  // descending

  RotationSolution out;
  out.diagnostics.smallest_singular = s(3);
  out.diagnostics.second_smallest_singular = s(2);
  out.diagnostics.largest_singular = s(0);
  out.diagnostics.pair_count = static_cast<int>(pairs.size());
  if (!(s(0) > 0.0) || s(2) < kDegeneracyRatio * s(0)) {
    throw CalibrationError(ErrorCode::kDegenerateMotion,
                           "relative rotations do not span two independent axes");
  }
  out.q = UnitQuaternion::from_vector_first(svd.matrixV().col(3)).canonical();
  return out;
}

RotationSolution solve_rotation_handeye(std::span<const RelativePosePair> pairs) {
  std::vector<std::pair<UnitQuaternion, UnitQuaternion>> quats;
  quats.reserve(pairs.size());
  for (const auto& p : pairs) {
    quats.emplace_back(rotation_to_quat(p.motion_a.rotation), rotation_to_quat(p.motion_b.rotation));
  }
  return solve_rotation_handeye(std::span<const std::pair<UnitQuaternion, UnitQuaternion>>(quats));
}

TranslationSolution solve_translation_handeye(std::span<const RelativePosePair> pairs,
                                              const Rotation& r_star, const lsq::Bounds& bounds) {
  if (pairs.size() < 3) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "translation hand-eye needs at least 3 pairs");
  }
  lsq::LinearSystem sys;
  sys.a.resize(3 * static_cast<Eigen::Index>(pairs.size()), 3);
  sys.b.resize(3 * static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto row = 3 * static_cast<Eigen::Index>(k);
    sys.a.middleRows<3>(row) = pairs[k].motion_a.rotation.matrix() - Mat3::Identity();
    sys.b.segment<3>(row) = r_star * pairs[k].motion_b.translation - pairs[k].motion_a.translation;
  }

  const Mat3 normal = sys.a.transpose() * sys.a;
  Eigen::SelfAdjointEigenSolver<Mat3> es(normal);
  const double top = es.eigenvalues()(2);
  if (!(top > 0.0)) {
    throw CalibrationError(ErrorCode::kSingularSystem,
                           "no relative rotation in the data; translation is unobservable");
  }

  TranslationSolution out;
  lsq::Bounds effective = bounds;
  for (int e = 0; e < 3; ++e) {
    if (es.eigenvalues()(e) > top / lsq::kMaxConditionNumber) continue;
    const Vec3 dir = es.eigenvectors().col(e).cwiseAbs();
    Eigen::Index axis = 0;
    if (dir.maxCoeff(&axis) < 1.0 - 1e-6) {
      throw CalibrationError(ErrorCode::kSingularSystem,
                             "unobservable translation direction is not a coordinate axis");
    }
    out.unobservable[static_cast<std::size_t>(axis)] = true;
    const double lo = bounds.lower(axis);
    const double hi = bounds.upper(axis);
    const double pin = (std::isfinite(lo) && std::isfinite(hi)) ? 0.5 * (lo + hi) : std::clamp(0.0, lo, hi);
    effective.lower(axis) = pin;
    effective.upper(axis) = pin;
  }
  out.translation = lsq::solve_bvls(sys, effective);
  return out;
}

RotationSolution solve_lidar_imu_rotation(std::span<const std::pair<double, Transform>> lidar_poses,
                                          std::span<const ImuSample> imu) {
  std::vector<RelativePosePair> pairs;
  for (std::size_t i = 1; i < lidar_poses.size(); ++i) {
    const auto& [t0, pose0] = lidar_poses[i - 1];
    const auto& [t1, pose1] = lidar_poses[i];
    PreintegratedDelta delta;
    try {
      delta = preintegrate(imu, t0, t1);
    } catch (const CalibrationError& e) {
      if (e.code() == ErrorCode::kEmptyWindow) continue;
      throw;
    }
    pairs.push_back({relative_motion(pose0, pose1), Transform{delta.d_rot, delta.d_pos}});
  }
  return solve_rotation_handeye(std::span<const RelativePosePair>(pairs));
}

}  // namespace extcal::handeye
