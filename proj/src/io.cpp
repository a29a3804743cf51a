/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "extcal/errors.hpp"

namespace extcal::io {

namespace {

constexpr double kRenormalizeTolerance = 1e-3;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Parses a row of exactly `n` comma-separated numbers; throws kParseError
// naming `where` on failure.
std::vector<double> parse_row(std::string_view line, std::size_t n, const std::string& where) {
  const auto fields = split(line, ',');
  if (fields.size() != n) {
    throw CalibrationError(ErrorCode::kParseError, where + ": expected " + std::to_string(n) + " fields, got " +
                                                       std::to_string(fields.size()));
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!parse_double(fields[i], out[i]) || !std::isfinite(out[i])) {
      throw CalibrationError(ErrorCode::kParseError, where + ": bad number '" + trim(fields[i]) + "'");
    }
  }
  return out;
}

Transform transform_from(const double* f, const std::string& where) {
  const Vec3 v(f[3], f[4], f[5]);
  const double w = f[6];
  const double norm = std::sqrt(v.squaredNorm() + w * w);
  if (std::abs(norm - 1.0) > kRenormalizeTolerance) {
    throw CalibrationError(ErrorCode::kNonUnitQuaternion, where + ": quaternion norm " + fmt(norm));
  }
  return Transform{quat_to_rotation(UnitQuaternion(w, v)), Vec3(f[0], f[1], f[2])};
}

std::string transform_fields(const Transform& x) {
  const UnitQuaternion q = rotation_to_quat(x.rotation);
  const Vec3& t = x.translation;
  return fmt(t.x()) + "," + fmt(t.y()) + "," + fmt(t.z()) + "," + fmt(q.vec().x()) + "," + fmt(q.vec().y()) + "," +
         fmt(q.vec().z()) + "," + fmt(q.w());
}

template <typename Fn>
void for_each_data_line(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    fn(t, number);
  }
}

// key = value pairs in file order.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  for_each_data_line(text, [&](const std::string& line, std::size_t number) {
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw CalibrationError(ErrorCode::kConfigError, "line " + std::to_string(number) + ": expected key = value");
    }
    out.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  });
  return out;
}

double number_value(const std::string& key, const std::string& value) {
  double v = 0.0;
  if (!parse_double(value, v)) throw CalibrationError(ErrorCode::kConfigError, key + ": bad number '" + value + "'");
  return v;
}

Vec3 vec3_value(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  if (parts.size() != 3) throw CalibrationError(ErrorCode::kConfigError, key + ": expected x,y,z");
  return Vec3(number_value(key, parts[0]), number_value(key, parts[1]), number_value(key, parts[2]));
}

std::uint64_t seed_value(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw CalibrationError(ErrorCode::kConfigError, key + ": bad integer '" + value + "'");
  }
  return v;
}

std::string backend_name(TranslationBackend b) {
  return b == TranslationBackend::kHandEye ? "hand_eye" : "absolute";
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CalibrationError(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CalibrationError(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw CalibrationError(ErrorCode::kIoError, "write failed for " + path.string());
}

std::string format_pose_line(double t, const Transform& pose) { return fmt(t) + "," + transform_fields(pose); }

std::string format_imu_line(const ImuSample& s) {
  return fmt(s.t) + "," + fmt(s.omega.x()) + "," + fmt(s.omega.y()) + "," + fmt(s.omega.z()) + "," +
         fmt(s.accel.x()) + "," + fmt(s.accel.y()) + "," + fmt(s.accel.z());
}

std::vector<TimedPose> read_pose_csv(const std::filesystem::path& path, FrameTag tag) {
  std::vector<TimedPose> out;
  const std::string name = path.string();
  for_each_data_line(read_text(path), [&](const std::string& line, std::size_t number) {
    const std::string where = name + ":" + std::to_string(number);
    const auto f = parse_row(line, 8, where);
    out.push_back({f[0], transform_from(f.data() + 1, where), tag});
  });
  return out;
}

void write_pose_csv(const std::filesystem::path& path, const std::vector<TimedPose>& poses) {
  std::string text = "# t x y z qx qy qz qw\n";
  for (const TimedPose& p : poses) text += format_pose_line(p.t, p.pose) + "\n";
  write_text(path, text);
}

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
  std::vector<ImuSample> out;
  const std::string name = path.string();
  for_each_data_line(read_text(path), [&](const std::string& line, std::size_t number) {
    const std::string where = name + ":" + std::to_string(number);
    const auto f = parse_row(line, 7, where);
    if (!out.empty() && !(f[0] > out.back().t)) {
      throw CalibrationError(ErrorCode::kNonMonotonicTime, where + ": timestamps must increase");
    }
    out.push_back({f[0], Vec3(f[1], f[2], f[3]), Vec3(f[4], f[5], f[6])});
  });
  return out;
}

void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples) {
  std::string text = "# t wx wy wz ax ay az\n";
  for (const ImuSample& s : samples) text += format_imu_line(s) + "\n";
  write_text(path, text);
}

Transform parse_transform(const std::string& text) {
  const auto f = parse_row(text, 7, "transform");
  return transform_from(f.data(), "transform");
}

std::string format_transform(const Transform& x) { return transform_fields(x); }

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "batch_size") {
      const double v = number_value(key, value);
      if (v != std::floor(v)) throw CalibrationError(ErrorCode::kConfigError, "batch_size must be an integer");
      cfg.batch.batch_size_n = static_cast<int>(v);
    } else if (key == "beta") {
      cfg.batch.beta = number_value(key, value);
    } else if (key == "epsilon") {
      cfg.batch.epsilon = number_value(key, value);
    } else if (key == "bound_radius_m") {
      cfg.bound_radius_m = number_value(key, value);
      if (cfg.bound_radius_m < 0.0) throw CalibrationError(ErrorCode::kConfigError, "bound_radius_m must be >= 0");
    } else if (key == "cad_prior_t") {
      cfg.batch.cad_prior_t = vec3_value(key, value);
    } else if (key == "max_association_gap_s") {
      cfg.batch.max_association_gap = number_value(key, value);
    } else if (key == "translation_backend") {
      if (value == "absolute") {
        cfg.batch.translation_backend = TranslationBackend::kAbsolute;
      } else if (value == "hand_eye") {
        cfg.batch.translation_backend = TranslationBackend::kHandEye;
      } else {
        throw CalibrationError(ErrorCode::kConfigError, "translation_backend must be absolute or hand_eye");
      }
    } else if (key == "gyro_std") {
      cfg.gyro_std = number_value(key, value);
      if (!(cfg.gyro_std > 0.0)) throw CalibrationError(ErrorCode::kConfigError, "gyro_std must be positive");
    } else if (key == "seed") {
      cfg.seed = seed_value(key, value);
    } else {
      throw CalibrationError(ErrorCode::kConfigError, "unknown config key '" + key + "'");
    }
  }
  cfg.batch.sigma_gyro = Mat3::Identity() * cfg.gyro_std * cfg.gyro_std;
  cfg.batch.bounds = cfg.bound_radius_m > 0.0 ? lsq::Bounds::box(cfg.batch.cad_prior_t, cfg.bound_radius_m)
                                              : lsq::Bounds::unbounded();
  cfg.batch.validate();
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

sim::ScenarioSpec parse_scenario(const std::string& text) {
  sim::ScenarioSpec spec;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "pose_rate") {
      spec.pose_rate = number_value(key, value);
    } else if (key == "imu_rate") {
      spec.imu_rate = number_value(key, value);
    } else if (key == "gravity") {
      spec.gravity = vec3_value(key, value);
    } else if (key == "segment") {
      const auto parts = split(value, ',');
      if (parts.size() != 5) {
        throw CalibrationError(ErrorCode::kConfigError, "segment: expected kind,duration,speed,yaw_rate,tilt");
      }
      sim::Segment seg;
      const std::string kind = trim(parts[0]);
      if (kind == "straight") {
        seg.kind = sim::SegmentKind::kStraight;
      } else if (kind == "arc") {
        seg.kind = sim::SegmentKind::kArc;
      } else if (kind == "figure_eight") {
        seg.kind = sim::SegmentKind::kFigureEight;
      } else if (kind == "s_curve") {
        seg.kind = sim::SegmentKind::kSCurve;
      } else {
        throw CalibrationError(ErrorCode::kConfigError, "segment: unknown kind '" + kind + "'");
      }
      seg.duration = number_value(key, parts[1]);
      seg.speed = number_value(key, parts[2]);
      seg.yaw_rate = number_value(key, parts[3]);
      seg.roll_pitch_excitation = number_value(key, parts[4]);
      spec.segments.push_back(seg);
    } else {
      throw CalibrationError(ErrorCode::kConfigError, "unknown scenario key '" + key + "'");
    }
  }
  try {
    spec.validate();
  } catch (const CalibrationError& e) {
    throw CalibrationError(ErrorCode::kConfigError, e.what());
  }
  return spec;
}

NoiseFile parse_noise(const std::string& text) {
  NoiseFile out;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "gyro_std") {
      out.noise.gyro_std = number_value(key, value);
    } else if (key == "accel_std") {
      out.noise.accel_std = number_value(key, value);
    } else if (key == "gyro_bias") {
      out.noise.gyro_bias = vec3_value(key, value);
    } else if (key == "pose_rot_std") {
      out.noise.pose_rot_std = number_value(key, value);
    } else if (key == "pose_trans_std") {
      out.noise.pose_trans_std = number_value(key, value);
    } else if (key == "seed") {
      out.noise.seed = seed_value(key, value);
    } else if (key == "extrinsic") {
      try {
        out.extrinsic = parse_transform(value);
      } catch (const CalibrationError& e) {
        throw CalibrationError(ErrorCode::kConfigError, e.what());
      }
    } else {
      throw CalibrationError(ErrorCode::kConfigError, "unknown noise key '" + key + "'");
    }
  }
  try {
    out.noise.validate();
  } catch (const CalibrationError& e) {
    throw CalibrationError(ErrorCode::kConfigError, e.what());
  }
  return out;
}

std::string format_report(const CalibrationReport& report, const RunConfig& cfg,
                          const std::optional<ReportMetrics>& metrics) {
  std::ostringstream out;
  out << "# extcal calibration report\n";
  out << "initial_extrinsic = " << format_transform(report.initial_extrinsic) << "\n";
  out << "final_extrinsic = " << format_transform(report.final_extrinsic) << "\n";
  out << "converged = " << (report.converged ? "true" : "false") << "\n";
  out << "iterations = " << report.iterations << "\n";
  out << "accepted_pairs = " << report.accepted_pairs << "\n";
  if (metrics) {
    out << "delta_t_m = " << fmt(metrics->delta_t) << "\n";
    out << "delta_r_deg = " << fmt(metrics->delta_r) << "\n";
  }
  out << "\n[config]\n";
  out << "batch_size = " << cfg.batch.batch_size_n << "\n";
  out << "beta = " << fmt(cfg.batch.beta) << "\n";
  out << "epsilon = " << fmt(cfg.batch.epsilon) << "\n";
  out << "bound_radius_m = " << fmt(cfg.bound_radius_m) << "\n";
  const Vec3& p = cfg.batch.cad_prior_t;
  out << "cad_prior_t = " << fmt(p.x()) << "," << fmt(p.y()) << "," << fmt(p.z()) << "\n";
  out << "max_association_gap_s = " << fmt(cfg.batch.max_association_gap) << "\n";
  out << "translation_backend = " << backend_name(cfg.batch.translation_backend) << "\n";
  out << "gyro_std = " << fmt(cfg.gyro_std) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "\n[cost_history]\n# iteration,total_error,rotation_error\n";
  for (const CostEntry& c : report.cost_history) {
    out << c.iteration << "," << fmt(c.total_error) << "," << fmt(c.rotation_error) << "\n";
  }
  out << "\n[gate_log]\n# batch_index,accepted,min_singular,note\n";
  for (const GateLogEntry& g : report.gate_log) {
    out << g.batch_index << "," << (g.accepted ? 1 : 0) << "," << fmt(g.min_singular) << "," << g.note << "\n";
  }
  return out.str();
}

std::string format_cost_csv(const CalibrationReport& report) {
  std::string out = "iteration,total_error,rotation_error\n";
  for (const CostEntry& c : report.cost_history) {
    out += std::to_string(c.iteration) + "," + fmt(c.total_error) + "," + fmt(c.rotation_error) + "\n";
  }
  return out;
}

ReportSummary read_report(const std::filesystem::path& path) {
  ReportSummary out;
  bool have_extrinsic = false;
  bool have_converged = false;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') break;  // header block only
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "final_extrinsic") {
      out.final_extrinsic = parse_transform(value);
      have_extrinsic = true;
    } else if (key == "converged") {
      out.converged = value == "true";
      have_converged = true;
    }
  }
  if (!have_extrinsic || !have_converged) {
    throw CalibrationError(ErrorCode::kParseError, path.string() + ": not a calibration report");
  }
  return out;
}

}  // namespace extcal::io
