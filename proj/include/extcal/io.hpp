/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "extcal/pipeline.hpp"
#include "extcal/sim.hpp"

namespace extcal::io {

// Pose lines are `t,x,y,z,qx,qy,qz,qw` with the scalar last. Quaternions on
// disk use the same rotation convention as UnitQuaternion.
std::vector<TimedPose> read_pose_csv(const std::filesystem::path& path, FrameTag tag = FrameTag::kBase);
void write_pose_csv(const std::filesystem::path& path, const std::vector<TimedPose>& poses);

// IMU lines are `t,wx,wy,wz,ax,ay,az`.
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples);

/// One pose in on-disk field order, 17 significant digits, no newline.
std::string format_pose_line(double t, const Transform& pose);
std::string format_imu_line(const ImuSample& s);

/// `x,y,z,qx,qy,qz,qw`.
Transform parse_transform(const std::string& text);
std::string format_transform(const Transform& x);

struct RunConfig {
  BatchConfig batch;
  double bound_radius_m = 0.0;  ///< 0 means unbounded
  double gyro_std = 0.01;       ///< rad/s, isotropic
  std::uint64_t seed = 0;
};

/// Flat `key = value` file; `#` starts a comment. Unknown keys throw kConfigError.
RunConfig read_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

/// Keys: pose_rate, imu_rate, gravity = x,y,z, and repeated
/// `segment = kind,duration,speed,yaw_rate,tilt` with kind one of
/// straight, arc, figure_eight, s_curve.
sim::ScenarioSpec parse_scenario(const std::string& text);
/// Keys: gyro_std, accel_std, gyro_bias = x,y,z, pose_rot_std, pose_trans_std,
/// seed, extrinsic = x,y,z,qx,qy,qz,qw. Angles are radians.
struct NoiseFile {
  sim::NoiseModel noise;
  Transform extrinsic;
};
NoiseFile parse_noise(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

struct ReportMetrics {
  double delta_t = 0.0;  ///< m
  double delta_r = 0.0;  ///< deg
};

/// Structured text report; deterministic for identical inputs.
std::string format_report(const CalibrationReport& report, const RunConfig& cfg,
                          const std::optional<ReportMetrics>& metrics);
/// `iteration,total_error,rotation_error` rows with a header.
std::string format_cost_csv(const CalibrationReport& report);

/// Reads back the final extrinsic and the convergence flag of a report.
struct ReportSummary {
  Transform final_extrinsic;
  bool converged = false;
};
ReportSummary read_report(const std::filesystem::path& path);

}  // namespace extcal::io
