/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>

#include <Eigen/Cholesky>

#include "extcal/errors.hpp"
#include "extcal/handeye.hpp"

namespace extcal {

namespace {

// Slack on the rotation-improvement test so that two solutions equal up to
// round-off count as "not worse".
constexpr double kRotationGuardSlack = 1e-12;

Vec3 solve_translation(const BatchConfig& cfg, const Rotation& r_hat, std::span<const PosePair> pairs) {
  if (cfg.translation_backend == TranslationBackend::kAbsolute) {
    lsq::LinearSystem sys;
    sys.a.resize(3 * static_cast<Eigen::Index>(pairs.size()), 3);
    sys.b.resize(3 * static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto row = 3 * static_cast<Eigen::Index>(i);
      sys.a.middleRows<3>(row) = Mat3::Identity();
      sys.b.segment<3>(row) = pairs[i].lidar.pose.translation - r_hat * pairs[i].base.pose.translation;
    }
    return lsq::solve_bvls(sys, cfg.bounds);
  }
  std::vector<handeye::RelativePosePair> motions;
  motions.reserve(pairs.size());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    motions.push_back({handeye::relative_motion(pairs[i - 1].base.pose, pairs[i].base.pose),
                       handeye::relative_motion(pairs[i - 1].lidar.pose, pairs[i].lidar.pose)});
  }
  return handeye::solve_translation_handeye(motions, r_hat, cfg.bounds).translation;
}

CalibrationState skip(const CalibrationState& state, int index, double min_singular, bool accepted,
                      std::string note) {
  CalibrationState out = state;
  out.batches_seen = index + 1;
  out.gate_log.push_back({index, accepted, min_singular, std::move(note)});
  return out;
}

}  // namespace

void BatchConfig::validate() const {
  if (batch_size_n < 3) throw CalibrationError(ErrorCode::kConfigError, "batch_size must be >= 3");
  if (!(beta > 0.0)) throw CalibrationError(ErrorCode::kConfigError, "beta must be positive");
  if (!(epsilon > 0.0)) throw CalibrationError(ErrorCode::kConfigError, "epsilon must be positive");
  if (!(max_association_gap >= 0.0)) {
    throw CalibrationError(ErrorCode::kConfigError, "max_association_gap must be non-negative");
  }
  if (!(bounds.lower.array() <= bounds.upper.array()).all()) {
    throw CalibrationError(ErrorCode::kConfigError, "translation bounds are inverted");
  }
  if (Eigen::LLT<Mat3>(sigma_gyro).info() != Eigen::Success) {
    throw CalibrationError(ErrorCode::kConfigError, "gyro covariance must be positive definite");
  }
}

std::vector<TimedPose> normalize_to_initial(std::span<const TimedPose> poses) {
  if (poses.empty()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "cannot normalize an empty pose stream");
  }
  const Transform origin_inv = poses.front().pose.inverse();
  std::vector<TimedPose> out(poses.begin(), poses.end());
  for (auto& p : out) p.pose = origin_inv * p.pose;
  out.front().pose = Transform::identity();
  return out;
}

Tilt gravity_align_init(std::span<const Vec3> static_accels) {
  constexpr double kGravity = 9.81;
  if (static_accels.size() < 10) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "gravity alignment needs at least 10 samples");
  }
  Vec3 mean = Vec3::Zero();
  double mag_mean = 0.0;
  for (const Vec3& a : static_accels) {
    mean += a;
    mag_mean += a.norm();
  }
  const double n = static_cast<double>(static_accels.size());
  mean /= n;
  mag_mean /= n;
  double mag_var = 0.0;
  for (const Vec3& a : static_accels) mag_var += (a.norm() - mag_mean) * (a.norm() - mag_mean);
  mag_var /= (n - 1.0);
  if (std::sqrt(mag_var) > 0.5) {
    throw CalibrationError(ErrorCode::kNotStatic, "accelerometer magnitude varies too much");
  }
  if (std::abs(mean.norm() - kGravity) > 0.2 * kGravity) {
    throw CalibrationError(ErrorCode::kNotStatic, "mean acceleration is not gravity");
  }
  return Tilt{std::atan2(mean.y(), mean.z()),
              std::atan2(-mean.x(), std::sqrt(mean.y() * mean.y() + mean.z() * mean.z()))};
}

std::vector<PosePair> associate_poses(std::span<const TimedPose> base_stream,
                                      std::span<const TimedPose> lidar_stream, double max_gap) {
  std::vector<PosePair> out;
  std::size_t next_free = 0;
  for (const TimedPose& lidar : lidar_stream) {
    auto first = base_stream.begin() + static_cast<std::ptrdiff_t>(next_free);
    auto hi = std::lower_bound(first, base_stream.end(), lidar.t,
                               [](const TimedPose& p, double t) { return p.t < t; });
    auto best = base_stream.end();
    if (hi != base_stream.end()) best = hi;
    if (hi != first) {
      auto lo = hi - 1;
      if (best == base_stream.end() || lidar.t - lo->t <= best->t - lidar.t) best = lo;
    }
    if (best == base_stream.end() || std::abs(lidar.t - best->t) > max_gap) continue;
    out.push_back({*best, lidar, lidar.t - best->t});
    next_free = static_cast<std::size_t>(best - base_stream.begin()) + 1;
  }
  return out;
}

PoseError pose_error(const Transform& extrinsic, std::span<const PosePair> pairs) {
  if (pairs.empty()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "pose error needs at least one pair");
  }
  double rot_sum = 0.0;
  double trans_sum = 0.0;
  for (const PosePair& p : pairs) {
    const Rotation residual = extrinsic.rotation * p.base.pose.rotation * p.lidar.pose.rotation.inverse();
    rot_sum += log_so3(residual).squaredNorm();
    trans_sum += (extrinsic.rotation * p.base.pose.translation + extrinsic.translation -
                  p.lidar.pose.translation)
                     .squaredNorm();
  }
  const double n = static_cast<double>(pairs.size());
  return PoseError{std::sqrt(rot_sum + trans_sum) / n, std::sqrt(rot_sum) / n};
}

CalibrationState step_batch(const CalibrationState& state, std::span<const PosePair> batch_pairs,
                            const observe::RateBatch& rate_batch, const BatchConfig& cfg) {
  const int index = state.batches_seen;
  if (static_cast<int>(batch_pairs.size()) != cfg.batch_size_n) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "batch must hold exactly batch_size_n pairs");
  }
  if (rate_batch.size() == 0) {
    return skip(state, index, 0.0, false, "no angular-rate samples in batch");
  }

  const observe::GateDecision gate = observe::gate_batch(rate_batch, state.r_bi, cfg.epsilon);
  if (!gate.accepted) {
    return skip(state, index, gate.min_singular, false, {});
  }

  CalibrationState next = state;
  next.batches_seen = index + 1;
  next.r_bi = gate.r_bi_estimate;
  for (const PosePair& p : batch_pairs) {
    next.accepted_pairs.push_back(p);
    next.davenport = qmethod::accumulate(next.davenport, p.base.pose.rotation, p.lidar.pose.rotation);
  }

  Rotation r_hat;
  try {
    r_hat = qmethod::solve_qmethod(qmethod::davenport_k(next.davenport)).rotation();
  } catch (const CalibrationError& e) {
    return skip(state, index, gate.min_singular, true, e.what());
  }

  const PoseError current = pose_error(state.extrinsic, next.accepted_pairs);
  const Transform rotated{r_hat, state.extrinsic.translation};
  const PoseError rotated_err = pose_error(rotated, next.accepted_pairs);

  if (rotated_err.rotation_only <= current.rotation_only + kRotationGuardSlack) {
    Vec3 t_hat;
    try {
      t_hat = solve_translation(cfg, r_hat, next.accepted_pairs);
    } catch (const CalibrationError& e) {
      return skip(state, index, gate.min_singular, true, e.what());
    }
    const Transform candidate{r_hat, t_hat};
    const PoseError cand_err = pose_error(candidate, next.accepted_pairs);
    const bool beats_history =
        next.cost_history.empty() || cand_err.total <= next.cost_history.back().total_error;
    if (cand_err.total <= current.total && beats_history) {
      next.extrinsic = candidate;
      next.cost_history.push_back({index, cand_err.total, cand_err.rotation_only});
    }
  }

  next.converged = pose_error(next.extrinsic, next.accepted_pairs).total < cfg.beta;
  next.gate_log.push_back({index, true, gate.min_singular, {}});
  return next;
}

CalibrationReport run_calibration(std::span<const TimedPose> base_stream,
                                  std::span<const TimedPose> lidar_stream,
                                  std::span<const ImuSample> base_rates,
                                  std::span<const ImuSample> sensor_rates, const BatchConfig& cfg) {
  cfg.validate();
  if (base_stream.empty() || lidar_stream.empty()) {
    throw CalibrationError(ErrorCode::kInsufficientData, "pose streams must be nonempty");
  }
  // Lidar odometry already starts at the identity in its own frame; only the
  // GNSS trajectory is re-anchored.
  const std::vector<TimedPose> base = normalize_to_initial(base_stream);
  const std::vector<PosePair> pairs = associate_poses(base, lidar_stream, cfg.max_association_gap);
  const auto n = static_cast<std::size_t>(cfg.batch_size_n);
  if (pairs.size() < n) {
    throw CalibrationError(ErrorCode::kInsufficientData,
                           "fewer than one batch of poses could be associated");
  }
  const std::size_t batches = pairs.size() / n;

  Rotation r_init;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<Vec3> tb, tl;
    for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
      tb.push_back(pairs[i].base.pose.translation);
      tl.push_back(pairs[i].lidar.pose.translation);
    }
    try {
      r_init = qmethod::kabsch_align(tb, tl).rotation;
      break;
    } catch (const CalibrationError& e) {
      if (e.code() != ErrorCode::kDegenerateGeometry) throw;
    }
  }

  CalibrationState state;
  state.extrinsic = Transform{r_init, cfg.cad_prior_t};
  state.r_bi = r_init.inverse();

  CalibrationReport report;
  report.initial_extrinsic = state.extrinsic;
  for (std::size_t b = 0; b < batches && !state.converged; ++b) {
    const std::span<const PosePair> window(pairs.data() + b * n, n);
    const observe::RateBatch rates =
        observe::make_rate_batch(base_rates, sensor_rates, window.front().base.t, window.back().base.t,
                                 cfg.max_association_gap, cfg.sigma_gyro);
    state = step_batch(state, window, rates, cfg);
    ++report.iterations;
  }

  report.final_extrinsic = state.extrinsic;
  report.converged = state.converged;
  report.accepted_pairs = state.accepted_pairs.size();
  report.cost_history = std::move(state.cost_history);
  report.gate_log = std::move(state.gate_log);
  return report;
}

std::vector<CalibrationReport> run_calibration_multi(std::span<const TimedPose> base_stream,
                                                     std::span<const ImuSample> base_rates,
                                                     std::span<const SensorStreams> sensors,
                                                     const BatchConfig& cfg) {
  std::vector<std::future<CalibrationReport>> jobs;
  jobs.reserve(sensors.size());
  for (const SensorStreams& s : sensors) {
    jobs.push_back(std::async(std::launch::async, [&, sp = &s] {
      return run_calibration(base_stream, sp->poses, base_rates, sp->rates, cfg);
    }));
  }
  std::vector<CalibrationReport> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

double metric_delta_t(const Vec3& t_hat, const Vec3& t_gt) {
  return std::sqrt((t_hat - t_gt).squaredNorm()) / 3.0;
}

double metric_delta_r(const Rotation& r_hat, const Rotation& r_gt) {
  const double c = std::clamp(0.5 * ((r_hat.inverse() * r_gt).matrix().trace() - 1.0), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

Mat3 optimal_rotation_noise(const Rotation& r_bl, const Rotation& r_b, const Rotation& r_l) {
  return -0.5 * (r_b.matrix() - r_bl.inverse().matrix() * r_l.matrix());
}

Vec3 optimal_translation_noise(const Rotation& r_bl, const Vec3& t_bl, const Rotation& r_b_rel,
                               const Vec3& t_b_rel, const Vec3& t_l_rel) {
  return -0.5 * ((r_b_rel.matrix() - Mat3::Identity()) * t_bl - (r_bl * t_l_rel - t_b_rel));
}

}  // namespace extcal
