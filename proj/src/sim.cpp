/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/sim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "extcal/errors.hpp"

namespace extcal::sim {

namespace {

// Roll and pitch oscillation frequencies inside an excited segment, Hz.
constexpr double kRollFreq = 0.5;
constexpr double kPitchFreq = 0.3;

// Constant yaw-rate piece of the drive.
struct Piece {
  double t0 = 0.0;
  double duration = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
  double psi0 = 0.0;
  Vec3 p0 = Vec3::Zero();
  std::size_t segment = 0;
};

struct Kinematics {
  Rotation rotation;
  Vec3 position = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  Vec3 specific_force = Vec3::Zero();
};

class Trajectory {
 public:
  explicit Trajectory(const ScenarioSpec& spec) : spec_(spec) {
    double t = 0.0;
    double psi = 0.0;
    Vec3 p = Vec3::Zero();
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
      const Segment& seg = spec.segments[s];
      seg_start_.push_back(t);
      std::vector<std::pair<double, double>> parts;  // (duration, yaw_rate)
      switch (seg.kind) {
        case SegmentKind::kStraight:
          parts = {{seg.duration, 0.0}};
          break;
        case SegmentKind::kArc:
          parts = {{seg.duration, seg.yaw_rate}};
          break;
        case SegmentKind::kFigureEight:
          parts = {{seg.duration / 2, seg.yaw_rate}, {seg.duration / 2, -seg.yaw_rate}};
          break;
        case SegmentKind::kSCurve:
          for (int k = 0; k < 4; ++k) parts.emplace_back(seg.duration / 4, k % 2 == 0 ? seg.yaw_rate : -seg.yaw_rate);
          break;
      }
      for (const auto& [d, w] : parts) {
        Piece piece{t, d, seg.speed, w, psi, p, s};
        pieces_.push_back(piece);
        p = planar_position(piece, d);
        psi += w * d;
        t += d;
      }
    }
    end_ = t;
  }

  double end() const { return end_; }

  Kinematics at(double t) const {
    const Piece& pc = piece_at(t);
    const double tau = t - pc.t0;
    const double psi = pc.psi0 + pc.yaw_rate * tau;
    const double dpsi = pc.yaw_rate;

    const Segment& seg = spec_.segments[pc.segment];
    double phi = 0.0, dphi = 0.0, ddphi = 0.0;
    double theta = 0.0, dtheta = 0.0, ddtheta = 0.0;
    if (seg.roll_pitch_excitation != 0.0) {
      const double u = t - seg_start_[pc.segment];
      tilt(seg.roll_pitch_excitation, seg.duration, 2 * std::numbers::pi * kRollFreq, u, phi, dphi, ddphi);
      tilt(seg.roll_pitch_excitation, seg.duration, 2 * std::numbers::pi * kPitchFreq, u, theta, dtheta, ddtheta);
    }

    Kinematics k;
    const Mat3 r = rot_z(psi) * rot_y(theta) * rot_x(phi);
    k.rotation = Rotation::project(r);
    k.position = planar_position(pc, tau);
    const double sp = std::sin(phi), cp = std::cos(phi);
    const double st = std::sin(theta), ct = std::cos(theta);
    k.omega = Vec3(dphi - dpsi * st, dtheta * cp + dpsi * ct * sp, -dtheta * sp + dpsi * ct * cp);
    const Vec3 accel = pc.speed * dpsi * Vec3(-std::sin(psi), std::cos(psi), 0.0);
    k.specific_force = r.transpose() * (accel - spec_.gravity);
    return k;
  }

 private:
  static Mat3 rot_x(double a) {
    Mat3 m;
    m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return m;
  }
  static Mat3 rot_y(double a) {
    Mat3 m;
    m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return m;
  }
  static Mat3 rot_z(double a) {
    Mat3 m;
    m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return m;
  }

  // x(u) = A sin^2(pi u / D) sin(a u) and its first two derivatives.
  static void tilt(double amp, double dur, double a, double u, double& x, double& dx, double& ddx) {
    const double b = std::numbers::pi / dur;
    const double w = std::sin(b * u) * std::sin(b * u);
    const double dw = b * std::sin(2 * b * u);
    const double ddw = 2 * b * b * std::cos(2 * b * u);
    const double s = std::sin(a * u), c = std::cos(a * u);
    x = amp * w * s;
    dx = amp * (dw * s + w * a * c);
    ddx = amp * (ddw * s + 2 * dw * a * c - w * a * a * s);
  }

  static Vec3 planar_position(const Piece& pc, double tau) {
    const double psi = pc.psi0 + pc.yaw_rate * tau;
    if (pc.yaw_rate == 0.0) {
      return pc.p0 + pc.speed * tau * Vec3(std::cos(pc.psi0), std::sin(pc.psi0), 0.0);
    }
    const double rho = pc.speed / pc.yaw_rate;
    return pc.p0 + rho * Vec3(std::sin(psi) - std::sin(pc.psi0), std::cos(pc.psi0) - std::cos(psi), 0.0);
  }

  const Piece& piece_at(double t) const {
    for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
      if (t < pieces_[i + 1].t0) return pieces_[i];
    }
    return pieces_.back();
  }

  const ScenarioSpec& spec_;
  std::vector<Piece> pieces_;
  std::vector<double> seg_start_;
  double end_ = 0.0;
};

std::vector<double> sample_times(double rate, double end) {
  std::vector<double> ts;
  const auto n = static_cast<long>(std::floor(end * rate + 1e-9));
  ts.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) ts.push_back(static_cast<double>(i) / rate);
  return ts;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (segments.empty()) throw CalibrationError(ErrorCode::kInvalidArgument, "scenario has no segments");
  for (const Segment& s : segments) {
    if (!(s.duration > 0.0)) throw CalibrationError(ErrorCode::kInvalidArgument, "segment duration must be positive");
  }
  if (!(pose_rate > 0.0) || !(imu_rate > 0.0)) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "sample rates must be positive");
  }
  if (imu_rate < pose_rate) throw CalibrationError(ErrorCode::kInvalidArgument, "imu_rate must be >= pose_rate");
}

double ScenarioSpec::total_duration() const {
  double d = 0.0;
  for (const Segment& s : segments) d += s.duration;
  return d;
}

void NoiseModel::validate() const {
  if (gyro_std < 0.0 || accel_std < 0.0 || pose_rot_std < 0.0 || pose_trans_std < 0.0) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "noise standard deviations must be non-negative");
  }
}

BaseStreams generate_base_trajectory(const ScenarioSpec& spec) {
  spec.validate();
  const Trajectory traj(spec);
  BaseStreams out;
  for (double t : sample_times(spec.pose_rate, traj.end())) {
    const Kinematics k = traj.at(t);
    out.poses.push_back({t, Transform{k.rotation, k.position}, FrameTag::kBase});
  }
  for (double t : sample_times(spec.imu_rate, traj.end())) {
    const Kinematics k = traj.at(t);
    out.rates.push_back({t, k.omega, k.specific_force});
  }
  return out;
}

BaseStreams derive_lidar_stream(const BaseStreams& base, const Transform& extrinsic, PoseModel model) {
  BaseStreams out;
  out.poses.reserve(base.poses.size());
  const Transform x_inv = extrinsic.inverse();
  for (const TimedPose& p : base.poses) {
    const Transform pose = model == PoseModel::kCommonFrame ? extrinsic * p.pose : x_inv * p.pose * extrinsic;
    out.poses.push_back({p.t, pose, FrameTag::kLidar});
  }

  const Mat3 rt = extrinsic.rotation.inverse().matrix();
  const Vec3& r = extrinsic.translation;
  const std::size_t n = base.rates.size();
  out.rates.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ImuSample& s = base.rates[i];
    Vec3 dw = Vec3::Zero();
    if (n > 1) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
      dw = (base.rates[hi].omega - base.rates[lo].omega) / (base.rates[hi].t - base.rates[lo].t);
    }
    const Vec3 f = s.accel + dw.cross(r) + s.omega.cross(s.omega.cross(r));
    out.rates.push_back({s.t, rt * s.omega, rt * f});
  }
  return out;
}

GeneratedScenario generate(const ScenarioSpec& spec, const Transform& extrinsic, PoseModel model) {
  BaseStreams base = generate_base_trajectory(spec);
  BaseStreams lidar = derive_lidar_stream(base, extrinsic, model);
  return GeneratedScenario{std::move(base.poses), std::move(base.rates), std::move(lidar.poses),
                           std::move(lidar.rates), extrinsic, model};
}

GeneratedScenario corrupt(const GeneratedScenario& scenario, const NoiseModel& noise) {
  noise.validate();
  GeneratedScenario out = scenario;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double std) {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v(i) = unit(rng);
    return Vec3(std * v);
  };

  auto corrupt_rates = [&](std::vector<ImuSample>& rates) {
    for (ImuSample& s : rates) {
      if (noise.gyro_std > 0.0) s.omega += draw(noise.gyro_std);
      s.omega += noise.gyro_bias;
      if (noise.accel_std > 0.0) s.accel += draw(noise.accel_std);
    }
  };
  auto corrupt_poses = [&](std::vector<TimedPose>& poses, std::size_t first) {
    for (std::size_t i = first; i < poses.size(); ++i) {
      Transform& p = poses[i].pose;
      if (noise.pose_rot_std > 0.0) p.rotation = p.rotation * exp_so3(draw(noise.pose_rot_std));
      if (noise.pose_trans_std > 0.0) p.translation += draw(noise.pose_trans_std);
    }
  };

  corrupt_rates(out.base_rates);
  corrupt_rates(out.lidar_rates);
  corrupt_poses(out.base_poses, 1);
  corrupt_poses(out.lidar_poses, 0);
  return out;
}

}  // namespace extcal::sim
