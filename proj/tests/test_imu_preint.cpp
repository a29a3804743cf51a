/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "extcal/errors.hpp"
#include "extcal/imu_preint.hpp"
#include "support/oracles.hpp"

namespace extcal {
namespace {

std::vector<ImuSample> constant_stream(const Vec3& w, const Vec3& f, double rate, double duration) {
  std::vector<ImuSample> out;
  const int n = static_cast<int>(std::round(rate * duration));
  for (int i = 0; i < n; ++i) out.push_back({i / rate, w, f});
  return out;
}

TEST(Preintegrate, SingleZeroSample) {
  const std::vector<ImuSample> s{{0.0, Vec3::Zero(), Vec3::Zero()}};
  const PreintegratedDelta d = preintegrate(s, 0.0, 1.0);
  EXPECT_EQ(d.d_rot.matrix(), Mat3::Identity());
  EXPECT_TRUE(d.d_vel.isZero(0.0));
  EXPECT_TRUE(d.d_pos.isZero(0.0));
  EXPECT_DOUBLE_EQ(d.duration, 1.0);
}

TEST(Preintegrate, ConstantYawRate) {
  const auto s = constant_stream(Vec3(0, 0, 0.5), Vec3::Zero(), 100.0, 1.0);
  const PreintegratedDelta d = preintegrate(s, 0.0, 1.0);
  EXPECT_LT(geodesic_distance(d.d_rot, exp_so3(Vec3(0, 0, 0.5))), 1e-6);
  EXPECT_TRUE(d.d_vel.isZero(0.0));
  EXPECT_TRUE(d.d_pos.isZero(0.0));
}

TEST(Preintegrate, ConstantForce) {
  const auto s = constant_stream(Vec3::Zero(), Vec3(1, 0, 0), 100.0, 1.0);
  const PreintegratedDelta d = preintegrate(s, 0.0, 1.0);
  EXPECT_LT((d.d_vel - Vec3(1, 0, 0)).norm(), 1e-6);
  EXPECT_LT((d.d_pos - Vec3(0.5, 0, 0)).norm(), 1e-2);
}

TEST(Preintegrate, Errors) {
  const auto s = constant_stream(Vec3::Zero(), Vec3::Zero(), 10.0, 1.0);
  EXPECT_THROW(preintegrate(s, 1.0, 1.0), CalibrationError);
  try {
    preintegrate(s, 5.0, 6.0);
    FAIL();
  } catch (const CalibrationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyWindow);
  }
  std::vector<ImuSample> bad = s;
  std::swap(bad[2], bad[3]);
  try {
    preintegrate(bad, 0.0, 1.0);
    FAIL();
  } catch (const CalibrationError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonMonotonicTime);
  }
}

TEST(Preintegrate, IgnoresSamplesOutsideWindow) {
  auto s = constant_stream(Vec3(0, 0, 1), Vec3::Zero(), 100.0, 2.0);
  const PreintegratedDelta d = preintegrate(s, 0.5, 1.0);
  EXPECT_NEAR(rotation_angle(d.d_rot), 0.5, 1e-12);
  EXPECT_NEAR(d.duration, 0.5, 1e-12);
}

TEST(Preintegrate, ConcatenationConsistency) {
  std::mt19937_64 rng(21);
  std::vector<ImuSample> s;
  for (int i = 0; i < 300; ++i) {
    const double t = i / 100.0;
    s.push_back({t, Vec3(std::sin(t), 0.3 * std::cos(2 * t), 0.5), oracle::random_vec(rng, 2.0)});
  }
  for (double tj : {0.5, 1.0, 1.37, 2.0}) {
    const PreintegratedDelta whole = preintegrate(s, 0.0, 3.0);
    const PreintegratedDelta joined = concatenate(preintegrate(s, 0.0, tj), preintegrate(s, tj, 3.0));
    EXPECT_LT(geodesic_distance(whole.d_rot, joined.d_rot), 1e-9);
    const double f_max = 2.0 * std::sqrt(3.0);
    EXPECT_LT((whole.d_pos - joined.d_pos).norm(), f_max * 0.01 * 0.01) << tj;
    EXPECT_NEAR(whole.duration, joined.duration, 1e-12);
  }
}

struct Rk4Case {
  const char* name;
  Vec3 omega;
  Vec3 force;
};

void PrintTo(const Rk4Case& c, std::ostream* os) { *os << c.name; }

class PreintegrateVsRk4 : public ::testing::TestWithParam<Rk4Case> {};

TEST_P(PreintegrateVsRk4, ConstantRateOneSecond) {
  const auto& c = GetParam();
  const auto s = constant_stream(c.omega, c.force, 100.0, 1.0);
  const PreintegratedDelta d = preintegrate(s, 0.0, 1.0);
  const oracle::Rk4State ref = oracle::rk4_integrate(c.omega, c.force, 1.0, 1000);
  EXPECT_LT(geodesic_distance(d.d_rot, Rotation::project(ref.r)), 1e-6);
  EXPECT_LT((d.d_pos - ref.p).norm(), 1e-4);
  EXPECT_LT((d.d_vel - ref.v).norm(), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(
    ConstantInputs, PreintegrateVsRk4,
    ::testing::Values(Rk4Case{"RotationOnly", Vec3(0.3, -0.2, 0.5), Vec3::Zero()},
                      Rk4Case{"ForceOnly", Vec3::Zero(), Vec3(1.0, -0.5, 0.2)},
                      Rk4Case{"ForceAlongAxis", Vec3(0.2, 0.1, -0.4), Vec3(0.4, 0.2, -0.8)},
                      Rk4Case{"YawWithGravity", Vec3(0, 0, 1.5), Vec3(0, 0, 9.81)}),
    [](const ::testing::TestParamInfo<Rk4Case>& info) { return std::string(info.param.name); });

// With a rotating specific force the zero-order hold is first order in the
// sample interval: doubling the rate halves the position error.
TEST(Preintegrate, HoldErrorIsFirstOrderForRotatingForce) {
  const Vec3 w(0.3, -0.2, 0.5), f(1.0, 0.5, -0.3);
  const oracle::Rk4State ref = oracle::rk4_integrate(w, f, 1.0, 4000);
  const double e100 = (preintegrate(constant_stream(w, f, 100.0, 1.0), 0.0, 1.0).d_pos - ref.p).norm();
  const double e200 = (preintegrate(constant_stream(w, f, 200.0, 1.0), 0.0, 1.0).d_pos - ref.p).norm();
  EXPECT_LT(e100, w.norm() * f.norm() * 0.01);
  EXPECT_NEAR(e100 / e200, 2.0, 0.1);
}

}  // namespace
}  // namespace extcal
