/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/observe.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "extcal/errors.hpp"
#include "extcal/lsq.hpp"

namespace extcal::observe {

void validate(const RateBatch& batch) {
  const std::size_t n = batch.timestamps.size();
  if (n == 0 || batch.omega_base.size() != n || batch.omega_sensor.size() != n) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "rate batch streams must be nonempty and of equal length");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(batch.timestamps[i] > batch.timestamps[i - 1])) {
      throw CalibrationError(ErrorCode::kNonMonotonicTime, "rate batch timestamps must increase");
    }
  }
  Eigen::LLT<Mat3> llt(batch.sigma_gyro);
  if (llt.info() != Eigen::Success || !batch.sigma_gyro.isApprox(batch.sigma_gyro.transpose())) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "gyro covariance must be symmetric positive definite");
  }
}

RateBatch make_rate_batch(std::span<const ImuSample> base, std::span<const ImuSample> sensor,
                          double t_begin, double t_end, double max_gap, const Mat3& sigma_gyro) {
  RateBatch batch;
  batch.sigma_gyro = sigma_gyro;
  auto by_time = [](const ImuSample& s, double t) { return s.t < t; };
  auto it = std::lower_bound(base.begin(), base.end(), t_begin, by_time);
  for (; it != base.end() && it->t <= t_end; ++it) {
    auto hi = std::lower_bound(sensor.begin(), sensor.end(), it->t, by_time);
    const ImuSample* best = nullptr;
    if (hi != sensor.end()) best = &*hi;
    if (hi != sensor.begin()) {
      const ImuSample* lo = &*(hi - 1);
      if (best == nullptr || it->t - lo->t <= best->t - it->t) best = lo;
    }
    if (best == nullptr || std::abs(best->t - it->t) > max_gap) continue;
    if (!batch.timestamps.empty() && !(it->t > batch.timestamps.back())) continue;
    batch.timestamps.push_back(it->t);
    batch.omega_base.push_back(it->omega);
    batch.omega_sensor.push_back(best->omega);
  }
  return batch;
}

Mat3 fisher_information(const RateBatch& batch, const Rotation& r_hat) {
  const Mat3 info = batch.sigma_gyro.inverse();
  Mat3 fisher = Mat3::Zero();
  for (const Vec3& w : batch.omega_base) {
    const Mat3 j = -r_hat.matrix() * skew(w);
    fisher += j.transpose() * info * j;
  }
  return 0.5 * (fisher + fisher.transpose());
}

Rotation align_angular_rates(const RateBatch& batch, const Rotation& r_init, int max_iters) {
  validate(batch);
  if (batch.size() < 3) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "rate alignment needs at least 3 samples");
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  Rotation r_hat = r_init;

  auto residual = [&](const Eigen::VectorXd& dx) {
    const Rotation r = r_hat * exp_so3(dx);
    Eigen::VectorXd out(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.segment<3>(3 * i) = r * batch.omega_base[i] - batch.omega_sensor[i];
    }
    return out;
  };
  auto jacobian = [&](const Eigen::VectorXd&) {
    Eigen::MatrixXd out(3 * n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.middleRows<3>(3 * i) = -r_hat.matrix() * skew(batch.omega_base[i]);
    }
    return out;
  };

  double step_norm = 0.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    lsq::GaussNewtonStep step;
    try {
      step = lsq::gauss_newton_step(residual, jacobian, Eigen::VectorXd::Zero(3), batch.sigma_gyro);
    } catch (const CalibrationError& e) {
      if (e.code() != ErrorCode::kSingularSystem) throw;
      throw CalibrationError(ErrorCode::kInsufficientExcitation,
                             "angular rates do not excite all three rotation axes");
    }
    step_norm = step.delta.norm();
    r_hat = r_hat * exp_so3(step.delta);
    if (step_norm < 1e-10) return r_hat;
  }
  if (step_norm > 1e-6) {
    throw CalibrationError(ErrorCode::kNotConverged, "angular-rate alignment did not converge");
  }
  return r_hat;
}

GateDecision gate_batch(const RateBatch& batch, const Rotation& r_hat, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "information threshold must be positive");
  }
  validate(batch);
  GateDecision out;
  out.r_bi_estimate = r_hat;
  Eigen::JacobiSVD<Mat3> svd(fisher_information(batch, r_hat));
  const Vec3 s = svd.singularValues();
  out.singular_values = {s(0), s(1), s(2)};
  out.min_singular = s(2);
  out.accepted = out.min_singular >= epsilon;
  if (out.accepted && batch.size() >= 3) {
    try {
      out.r_bi_estimate = align_angular_rates(batch, r_hat, 20);
    } catch (const CalibrationError&) {
      // keep r_hat; the gate decision itself only depends on the Fisher matrix
    }
  }
  return out;
}

}  // namespace extcal::observe
