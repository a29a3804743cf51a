/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <span>
#include <string>
#include <vector>

#include "extcal/geom.hpp"
#include "extcal/imu_preint.hpp"
#include "extcal/lsq.hpp"
#include "extcal/observe.hpp"
#include "extcal/qmethod.hpp"

namespace extcal {

enum class FrameTag { kBase, kLidar };

struct TimedPose {
  double t = 0.0;
  Transform pose;
  FrameTag frame_tag = FrameTag::kBase;
};

struct PosePair {
  TimedPose base;
  TimedPose lidar;
  double dt = 0.0;  ///< lidar.t - base.t
};

enum class TranslationBackend {
  kHandEye,   ///< (R_B,rel - I) t = R t_L,rel - t_B,rel over consecutive accepted pairs
  kAbsolute,  ///< R t_B + t - t_L = 0 over all accepted pairs
};

struct BatchConfig {
  int batch_size_n = 50;
  double beta = 1e-3;      ///< stop once the normalized pose error drops below this
  double epsilon = 1.0;    ///< minimum Fisher singular value for a batch to count
  lsq::Bounds bounds;      ///< translation search box
  double max_association_gap = 0.05;  ///< s
  TranslationBackend translation_backend = TranslationBackend::kAbsolute;
  Vec3 cad_prior_t = Vec3::Zero();     ///< measured initial translation, m
  Mat3 sigma_gyro = Mat3::Identity() * 1e-4;

  void validate() const;
};

struct CostEntry {
  int iteration = 0;
  double total_error = 0.0;
  double rotation_error = 0.0;
};

struct GateLogEntry {
  int batch_index = 0;
  bool accepted = false;
  double min_singular = 0.0;
  std::string note;  ///< empty, or why an accepted batch was skipped
};

struct CalibrationState {
  Transform extrinsic;
  std::vector<PosePair> accepted_pairs;
  qmethod::DavenportAccumulator davenport;
  std::vector<CostEntry> cost_history;
  bool converged = false;
  Rotation r_bi;  ///< running estimate of the sensor-IMU rotation from the rate alignment
  std::vector<GateLogEntry> gate_log;
  int batches_seen = 0;
};

struct PoseError {
  double total = 0.0;
  double rotation_only = 0.0;
};

struct CalibrationReport {
  Transform initial_extrinsic;
  Transform final_extrinsic;
  bool converged = false;
  int iterations = 0;
  std::size_t accepted_pairs = 0;
  std::vector<CostEntry> cost_history;
  std::vector<GateLogEntry> gate_log;
};

/// P'_i = P_0^-1 P_i; the first output is the identity.
std::vector<TimedPose> normalize_to_initial(std::span<const TimedPose> poses);

struct Tilt {
  double roll = 0.0;   ///< rad
  double pitch = 0.0;  ///< rad
};

/**
 * Roll and pitch from the mean of static accelerometer readings:
 * roll = atan2(g_y, g_z), pitch = atan2(-g_x, sqrt(g_y^2 + g_z^2)).
 * Needs >= 10 samples with mean magnitude within 20% of 9.81 m/s^2; throws
 * kNotStatic when the magnitude standard deviation exceeds 0.5 m/s^2.
 */
Tilt gravity_align_init(std::span<const Vec3> static_accels);

/// Greedy nearest-timestamp matching; every base pose is used at most once.
std::vector<PosePair> associate_poses(std::span<const TimedPose> base_stream,
                                      std::span<const TimedPose> lidar_stream, double max_gap);

/**
 * xi_i = |log(R R_B,i R_L,i^T)|_F^2 + |R t_B,i + t - t_L,i|^2,
 * total = sqrt(sum xi_i) / N and rotation_only likewise with the first term.
 */
PoseError pose_error(const Transform& extrinsic, std::span<const PosePair> pairs);

/**
 * One pass of the online loop over a batch of N associated poses:
 * gate on angular-rate information, accumulate, re-solve rotation with the
 * Q-method over everything accepted so far, and adopt the new extrinsic
 * only when it improves the rotation error and then the total error.
 * Rejected or unsolvable batches only add a gate-log entry.
 */
CalibrationState step_batch(const CalibrationState& state, std::span<const PosePair> batch_pairs,
                            const observe::RateBatch& rate_batch, const BatchConfig& cfg);

/**
 * Full run over recorded streams: normalizes the base trajectory, associates
 * poses, initializes the rotation by point alignment of the first batch of
 * translations that is not collinear (translation from cfg.cad_prior_t),
 * then steps over consecutive non-overlapping batches until converged.
 * Throws kInsufficientData when fewer than one batch of poses associates.
 */
CalibrationReport run_calibration(std::span<const TimedPose> base_stream,
                                  std::span<const TimedPose> lidar_stream,
                                  std::span<const ImuSample> base_rates,
                                  std::span<const ImuSample> sensor_rates, const BatchConfig& cfg);

struct SensorStreams {
  std::vector<TimedPose> poses;
  std::vector<ImuSample> rates;
};

/// Independent runs, one per sensor, executed concurrently.
std::vector<CalibrationReport> run_calibration_multi(std::span<const TimedPose> base_stream,
                                                     std::span<const ImuSample> base_rates,
                                                     std::span<const SensorStreams> sensors,
                                                     const BatchConfig& cfg);

/// (1/3) |t_hat - t_gt|, metres.
double metric_delta_t(const Vec3& t_hat, const Vec3& t_gt);

/// acos((tr(R_hat^-1 R_gt) - 1) / 2) in degrees.
double metric_delta_r(const Rotation& r_hat, const Rotation& r_gt);

/// Stationary base-side rotation noise -1/2 (R_B - R_BL^-1 R_L).
Mat3 optimal_rotation_noise(const Rotation& r_bl, const Rotation& r_b, const Rotation& r_l);

/// Stationary base-side translation noise
/// -1/2 [(R_B,rel - I) t_BL - (R_BL t_L,rel - t_B,rel)].
Vec3 optimal_translation_noise(const Rotation& r_bl, const Vec3& t_bl, const Rotation& r_b_rel,
                               const Vec3& t_b_rel, const Vec3& t_l_rel);

}  // namespace extcal
