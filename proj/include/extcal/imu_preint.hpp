/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <span>

#include "extcal/geom.hpp"

namespace extcal {

/// One gyro/accelerometer reading, body frame, biases already removed.
struct ImuSample {
  double t = 0.0;                 ///< seconds
  Vec3 omega = Vec3::Zero();      ///< rad/s
  Vec3 accel = Vec3::Zero();      ///< specific force, m/s^2

  bool operator==(const ImuSample&) const = default;
};

/// Relative motion accumulated between two timestamps.
struct PreintegratedDelta {
  Rotation d_rot;
  Vec3 d_vel = Vec3::Zero();
  Vec3 d_pos = Vec3::Zero();
  double duration = 0.0;
};

/**
 * Compounds the samples with t in [t_i, t_j) under a zero-order hold:
 *
 *   dR <- dR Exp(w_k dt_k)
 *   dv <- dv + dR f_k dt_k
 *   dp <- dp + dv dt_k + 1/2 dR f_k dt_k^2
 *
 * where dt_k runs to the next sample and the last interval ends at t_j.
 * Gravity is not removed; the specific force is integrated as given.
 *
 * Throws kInvalidArgument if t_i >= t_j, kNonMonotonicTime if the samples are
 * not strictly increasing in time and kEmptyWindow if none falls in range.
 */
PreintegratedDelta preintegrate(std::span<const ImuSample> samples, double t_i, double t_j);

/// Concatenates two consecutive deltas (a over [t_i, t_j], b over [t_j, t_k]).
PreintegratedDelta concatenate(const PreintegratedDelta& a, const PreintegratedDelta& b);

}  // namespace extcal
