/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "extcal/geom.hpp"
#include "extcal/imu_preint.hpp"
#include "extcal/pipeline.hpp"

namespace extcal::sim {

enum class SegmentKind { kStraight, kArc, kFigureEight, kSCurve };

/**
 * One piece of a planar unicycle drive. figure_eight runs its first half at
 * +yaw_rate and its second half at -yaw_rate; s_curve alternates the sign
 * every quarter. A nonzero roll_pitch_excitation superimposes windowed
 * sinusoidal roll and pitch that vanish at both segment ends.
 */
struct Segment {
  SegmentKind kind = SegmentKind::kStraight;
  double duration = 1.0;               ///< s
  double speed = 0.0;                  ///< m/s
  double yaw_rate = 0.0;               ///< rad/s
  double roll_pitch_excitation = 0.0;  ///< rad
};

struct ScenarioSpec {
  std::vector<Segment> segments;
  double pose_rate = 10.0;   ///< Hz
  double imu_rate = 100.0;   ///< Hz
  Vec3 gravity{0.0, 0.0, -9.81};

  /// Throws kInvalidArgument when a duration or rate is not positive or
  /// imu_rate < pose_rate.
  void validate() const;
  double total_duration() const;
};

struct NoiseModel {
  double gyro_std = 0.0;        ///< rad/s
  double accel_std = 0.0;       ///< m/s^2
  Vec3 gyro_bias = Vec3::Zero();  ///< rad/s
  double pose_rot_std = 0.0;    ///< rad, per tangent axis
  double pose_trans_std = 0.0;  ///< m, per axis
  std::uint64_t seed = 0;

  void validate() const;
};

enum class PoseModel {
  kCommonFrame,  ///< T_L = X T_B
  kSensorFrame,  ///< T_L = X^-1 T_B X
};

struct BaseStreams {
  std::vector<TimedPose> poses;
  std::vector<ImuSample> rates;
};

struct GeneratedScenario {
  std::vector<TimedPose> base_poses;
  std::vector<ImuSample> base_rates;
  std::vector<TimedPose> lidar_poses;
  std::vector<ImuSample> lidar_rates;
  Transform ground_truth_extrinsic;
  PoseModel pose_model = PoseModel::kCommonFrame;
};

/// Exact kinematics sampled at pose_rate and imu_rate, both starting at t = 0.
BaseStreams generate_base_trajectory(const ScenarioSpec& spec);

/**
 * Lidar poses under `model` and lidar-IMU samples with w_I = R_X^T w_B and
 * the lever-arm specific force R_X^T (f_B + dw x r + w x (w x r)), r = t_X.
 */
BaseStreams derive_lidar_stream(const BaseStreams& base, const Transform& extrinsic, PoseModel model);

/// Convenience: base trajectory plus derived lidar streams.
GeneratedScenario generate(const ScenarioSpec& spec, const Transform& extrinsic, PoseModel model);

/**
 * Adds white gyro/accel noise and a constant gyro bias to both rate streams,
 * and right-multiplied tangent noise plus additive translation noise to every
 * pose except the first base pose, which stays the identity reference.
 * Deterministic in noise.seed.
 */
GeneratedScenario corrupt(const GeneratedScenario& scenario, const NoiseModel& noise);

}  // namespace extcal::sim
