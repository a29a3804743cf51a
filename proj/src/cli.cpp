/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "extcal/errors.hpp"
#include "extcal/io.hpp"
#include "extcal/observe.hpp"
#include "extcal/pipeline.hpp"
#include "extcal/sim.hpp"

namespace extcal {

namespace {

namespace fs = std::filesystem;

Transform read_ground_truth(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() != '#') return io::parse_transform(line);
  }
  throw CalibrationError(ErrorCode::kParseError, path.string() + ": no extrinsic line");
}

void write_ground_truth(const fs::path& path, const Transform& x) {
  io::write_text(path, "# x y z qx qy qz qw\n" + io::format_transform(x) + "\n");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct SimulateArgs {
  std::string scenario, noise, out_dir, pose_model = "common-frame";
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const sim::ScenarioSpec spec = io::parse_scenario(io::read_text(a.scenario));
  io::NoiseFile nf = io::parse_noise(io::read_text(a.noise));
  if (a.seed) nf.noise.seed = *a.seed;
  const sim::PoseModel model =
      a.pose_model == "sensor-frame" ? sim::PoseModel::kSensorFrame : sim::PoseModel::kCommonFrame;
  const sim::GeneratedScenario clean = sim::generate(spec, nf.extrinsic, model);
  const sim::GeneratedScenario noisy = sim::corrupt(clean, nf.noise);

  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CalibrationError(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  io::write_pose_csv(dir / "base_poses.csv", noisy.base_poses);
  io::write_pose_csv(dir / "lidar_poses.csv", noisy.lidar_poses);
  io::write_imu_csv(dir / "base_imu.csv", noisy.base_rates);
  io::write_imu_csv(dir / "lidar_imu.csv", noisy.lidar_rates);
  write_ground_truth(dir / "ground_truth.txt", noisy.ground_truth_extrinsic);
  out << "wrote " << noisy.base_poses.size() << " poses and " << noisy.base_rates.size()
      << " IMU samples per stream to " << dir.string() << " (seed " << nf.noise.seed << ")\n";
  return kExitOk;
}

struct CalibrateArgs {
  std::string base_poses, lidar_poses, base_imu, lidar_imu, config, report, ground_truth;
};

int run_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const io::RunConfig cfg = io::read_config(a.config);
  const auto base = io::read_pose_csv(a.base_poses, FrameTag::kBase);
  const auto lidar = io::read_pose_csv(a.lidar_poses, FrameTag::kLidar);
  const auto base_imu = io::read_imu_csv(a.base_imu);
  const auto lidar_imu = io::read_imu_csv(a.lidar_imu);

  const CalibrationReport report = run_calibration(base, lidar, base_imu, lidar_imu, cfg.batch);
  std::optional<io::ReportMetrics> metrics;
  if (!a.ground_truth.empty()) {
    const Transform gt = read_ground_truth(a.ground_truth);
    metrics = io::ReportMetrics{metric_delta_t(report.final_extrinsic.translation, gt.translation),
                                metric_delta_r(report.final_extrinsic.rotation, gt.rotation)};
  }
  io::write_text(a.report, io::format_report(report, cfg, metrics));
  io::write_text(a.report + ".cost.csv", io::format_cost_csv(report));
  out << "final_extrinsic = " << io::format_transform(report.final_extrinsic) << "\n";
  out << "converged = " << (report.converged ? "true" : "false") << "\n";
  return report.converged ? kExitOk : kExitNotConverged;
}

struct GateArgs {
  std::string base_imu, lidar_imu, config;
};

int run_gate_inspect(const GateArgs& a, std::ostream& out) {
  const io::RunConfig cfg = io::read_config(a.config);
  const auto base_imu = io::read_imu_csv(a.base_imu);
  const auto lidar_imu = io::read_imu_csv(a.lidar_imu);
  out << "batch,min_singular,accepted\n";
  if (base_imu.empty()) return kExitOk;
  const observe::RateBatch all =
      observe::make_rate_batch(base_imu, lidar_imu, base_imu.front().t, base_imu.back().t,
                               cfg.batch.max_association_gap, cfg.batch.sigma_gyro);
  const auto n = static_cast<std::size_t>(cfg.batch.batch_size_n);
  for (std::size_t b = 0; b < all.size() / n; ++b) {
    observe::RateBatch batch;
    batch.sigma_gyro = all.sigma_gyro;
    for (std::size_t i = b * n; i < (b + 1) * n; ++i) {
      batch.timestamps.push_back(all.timestamps[i]);
      batch.omega_base.push_back(all.omega_base[i]);
      batch.omega_sensor.push_back(all.omega_sensor[i]);
    }
    const observe::GateDecision d = observe::gate_batch(batch, Rotation::identity(), cfg.batch.epsilon);
    out << b << "," << fmt(d.min_singular) << "," << (d.accepted ? 1 : 0) << "\n";
  }
  return kExitOk;
}

struct EvaluateArgs {
  std::string report, ground_truth;
};

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const io::ReportSummary rep = io::read_report(a.report);
  const Transform gt = read_ground_truth(a.ground_truth);
  out << "delta_t_m = " << fmt(metric_delta_t(rep.final_extrinsic.translation, gt.translation)) << "\n";
  out << "delta_r_deg = " << fmt(metric_delta_r(rep.final_extrinsic.rotation, gt.rotation)) << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extrinsic calibration of a lidar against a GNSS/IMU base frame", "extcal"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--scenario", sim_args.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--noise", sim_args.noise, "noise file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_args.out_dir, "output directory")->required();
  simulate->add_option("--pose-model", sim_args.pose_model, "common-frame or sensor-frame")
      ->check(CLI::IsMember({"common-frame", "sensor-frame"}));
  simulate->add_option("--seed", sim_args.seed, "override the noise seed");

  CalibrateArgs cal_args;
  auto* calibrate = app.add_subcommand("calibrate", "estimate the extrinsic from recorded streams");
  calibrate->add_option("--base-poses", cal_args.base_poses)->required()->check(CLI::ExistingFile);
  calibrate->add_option("--lidar-poses", cal_args.lidar_poses)->required()->check(CLI::ExistingFile);
  calibrate->add_option("--base-imu", cal_args.base_imu)->required()->check(CLI::ExistingFile);
  calibrate->add_option("--lidar-imu", cal_args.lidar_imu)->required()->check(CLI::ExistingFile);
  calibrate->add_option("--config", cal_args.config)->required()->check(CLI::ExistingFile);
  calibrate->add_option("--report", cal_args.report)->required();
  calibrate->add_option("--ground-truth", cal_args.ground_truth, "adds delta_t/delta_r to the report")
      ->check(CLI::ExistingFile);

  GateArgs gate_args;
  auto* gate = app.add_subcommand("gate-inspect", "per-batch Fisher information of the rate streams");
  gate->add_option("--base-imu", gate_args.base_imu)->required()->check(CLI::ExistingFile);
  gate->add_option("--lidar-imu", gate_args.lidar_imu)->required()->check(CLI::ExistingFile);
  gate->add_option("--config", gate_args.config)->required()->check(CLI::ExistingFile);

  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "compare a report against ground truth");
  evaluate->add_option("--report", eval_args.report)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--ground-truth", eval_args.ground_truth)->required()->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "extcal: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim_args, out);
    if (calibrate->parsed()) return run_calibrate(cal_args, out);
    if (gate->parsed()) return run_gate_inspect(gate_args, out);
    if (evaluate->parsed()) return run_evaluate(eval_args, out);
  } catch (const std::exception& e) {
    err << "extcal: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace extcal
