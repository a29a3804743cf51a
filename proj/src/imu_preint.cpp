/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/imu_preint.hpp"

#include <algorithm>
#include <string>

#include "extcal/errors.hpp"

namespace extcal {

PreintegratedDelta preintegrate(std::span<const ImuSample> samples, double t_i, double t_j) {
  if (!(t_i < t_j)) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "preintegration window must satisfy t_i < t_j");
  }
  for (std::size_t k = 1; k < samples.size(); ++k) {
    if (!(samples[k].t > samples[k - 1].t)) {
      throw CalibrationError(ErrorCode::kNonMonotonicTime,
                             "sample " + std::to_string(k) + " is not after its predecessor");
    }
  }

  auto first = std::lower_bound(samples.begin(), samples.end(), t_i,
                                [](const ImuSample& s, double t) { return s.t < t; });
  auto last = std::lower_bound(first, samples.end(), t_j,
                               [](const ImuSample& s, double t) { return s.t < t; });
  if (first == last) {
    throw CalibrationError(ErrorCode::kEmptyWindow, "no IMU samples in the requested window");
  }

  PreintegratedDelta out;
  for (auto it = first; it != last; ++it) {
    const double t_next = (it + 1 != last) ? (it + 1)->t : t_j;
    const double dt = t_next - it->t;
    const Vec3 f_world = out.d_rot * it->accel;
    out.d_pos += out.d_vel * dt + 0.5 * f_world * dt * dt;
    out.d_vel += f_world * dt;
    out.d_rot = out.d_rot * exp_so3(it->omega * dt);
  }
  out.duration = t_j - first->t;
  return out;
}

PreintegratedDelta concatenate(const PreintegratedDelta& a, const PreintegratedDelta& b) {
  PreintegratedDelta out;
  out.d_rot = a.d_rot * b.d_rot;
  out.d_vel = a.d_vel + a.d_rot * b.d_vel;
  out.d_pos = a.d_pos + a.d_vel * b.duration + a.d_rot * b.d_pos;
  out.duration = a.duration + b.duration;
  return out;
}

}  // namespace extcal
