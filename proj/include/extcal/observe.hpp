/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <array>
#include <span>
#include <vector>

#include "extcal/geom.hpp"
#include "extcal/imu_preint.hpp"

namespace extcal::observe {

/// Time-aligned angular rates of the base IMU and a sensor-embedded IMU.
struct RateBatch {
  std::vector<Vec3> omega_base;    ///< rad/s, base frame
  std::vector<Vec3> omega_sensor;  ///< rad/s, sensor IMU frame
  std::vector<double> timestamps;  ///< s, strictly increasing
  Mat3 sigma_gyro = Mat3::Identity();

  std::size_t size() const { return timestamps.size(); }
};

struct GateDecision {
  bool accepted = false;
  double min_singular = 0.0;
  std::array<double, 3> singular_values{0.0, 0.0, 0.0};  ///< descending
  Rotation r_bi_estimate;
};

/// Throws kInvalidArgument when the batch violates its invariants.
void validate(const RateBatch& batch);

/**
 * Pairs every base sample in [t_begin, t_end] with the nearest sensor sample
 * no further than `max_gap` away. Samples without a partner are dropped.
 */
RateBatch make_rate_batch(std::span<const ImuSample> base, std::span<const ImuSample> sensor,
                          double t_begin, double t_end, double max_gap, const Mat3& sigma_gyro);

/// sum_i J_i^T Sigma^-1 J_i with the tangent-space Jacobian J_i = -R [w_b,i]x.
Mat3 fisher_information(const RateBatch& batch, const Rotation& r_hat);

/**
 * Gauss-Newton on SO(3) for argmin_R sum |R w_b,i - w_s,i|^2_Sigma with the
 * right-multiplicative update R <- R Exp(dx). Stops once |dx| < 1e-10.
 *
 * Throws kInsufficientExcitation if the Fisher matrix at r_init is singular
 * and kNotConverged if max_iters runs out while |dx| > 1e-6.
 */
Rotation align_angular_rates(const RateBatch& batch, const Rotation& r_init, int max_iters);

/// Accepts the batch iff the smallest singular value of the Fisher matrix is
/// at least `epsilon`. Accepted batches also carry a refined R_BI estimate.
GateDecision gate_batch(const RateBatch& batch, const Rotation& r_hat, double epsilon);

}  // namespace extcal::observe
