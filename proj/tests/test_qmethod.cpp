/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "extcal/errors.hpp"
#include "extcal/qmethod.hpp"
#include "support/oracles.hpp"

namespace extcal::qmethod {
namespace {

Rotation random_rotation(std::mt19937_64& rng) { return Rotation::from_matrix(oracle::random_rotation_matrix(rng)); }

ErrorCode thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const CalibrationError& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected CalibrationError";
  return ErrorCode::kInvalidArgument;
}

TEST(Kabsch, IdenticalSetsGiveIdentity) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}};
  const Transform t = kabsch_align(pts, pts);
  EXPECT_TRUE(t.rotation.matrix().isApprox(Mat3::Identity(), 1e-14));
  EXPECT_LT(t.translation.norm(), 1e-14);
}

TEST(Kabsch, RecoversQuarterTurnAndOffset) {
  std::mt19937_64 rng(41);
  const Transform truth{exp_so3(Vec3(0, 0, std::numbers::pi / 2)), Vec3(1, 2, 0)};
  std::vector<Vec3> b, l;
  for (int i = 0; i < 10; ++i) {
    b.push_back(oracle::random_vec(rng, 5.0));
    l.push_back(truth * b.back());
  }
  const Transform t = kabsch_align(b, l);
  EXPECT_LT((t.rotation.matrix() - truth.rotation.matrix()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((t.translation - truth.translation).norm(), 1e-10);
}

TEST(Kabsch, ReflectionIsCorrected) {
  std::mt19937_64 rng(42);
  std::vector<Vec3> b, l;
  for (int i = 0; i < 8; ++i) {
    b.push_back(oracle::random_vec(rng));
    l.push_back(Vec3(-b.back().x(), b.back().y(), b.back().z()));
  }
  EXPECT_NEAR(kabsch_align(b, l).rotation.matrix().determinant(), 1.0, 1e-12);
}

TEST(Kabsch, CollinearPointsAreDegenerate) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  EXPECT_EQ(thrown_code([&] { kabsch_align(pts, pts); }), ErrorCode::kDegenerateGeometry);
}

TEST(Kabsch, SizeChecks) {
  const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_EQ(thrown_code([&] { kabsch_align(two, two); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(thrown_code([&] { kabsch_align(three, two); }), ErrorCode::kInvalidArgument);
}

TEST(Accumulate, IdentityPair) {
  const DavenportAccumulator acc = accumulate({}, Rotation::identity(), Rotation::identity());
  EXPECT_EQ(acc.delta, Mat3::Identity());
  EXPECT_EQ(acc.count, 1);
}

TEST(Accumulate, RepeatedIdenticalPairsSumToScaledIdentity) {
  std::mt19937_64 rng(43);
  const Rotation r0 = random_rotation(rng);
  DavenportAccumulator acc;
  for (int i = 0; i < 7; ++i) acc = accumulate(acc, r0, r0);
  EXPECT_TRUE(acc.delta.isApprox(7.0 * Mat3::Identity(), 1e-14));
  EXPECT_EQ(acc.count, 7);
}

TEST(Accumulate, OrderIndependent) {
  std::mt19937_64 rng(44);
  std::vector<std::pair<Rotation, Rotation>> pairs;
  for (int i = 0; i < 10; ++i) pairs.emplace_back(random_rotation(rng), random_rotation(rng));
  DavenportAccumulator fwd, rev;
  for (const auto& [a, b] : pairs) fwd = accumulate(fwd, a, b);
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) rev = accumulate(rev, it->first, it->second);
  EXPECT_TRUE(fwd.delta.isApprox(rev.delta, 1e-14));
}

TEST(DavenportK, IdentityDelta) {
  DavenportAccumulator acc{Mat3::Identity(), 1};
  const Mat4 k = davenport_k(acc).k;
  EXPECT_EQ(k, Vec4(-1, -1, -1, 3).asDiagonal().toDenseMatrix());
  const QMethodSolution sol = solve_qmethod(davenport_k(acc));
  EXPECT_EQ(sol.q.vector_first(), Vec4(0, 0, 0, 1));
  EXPECT_DOUBLE_EQ(sol.lambda_max, 3.0);
}

TEST(DavenportK, SymmetricAndTraceless) {
  std::mt19937_64 rng(45);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    DavenportAccumulator acc;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) acc.delta(r, c) = n(rng);
    acc.count = 1;
    const Mat4 k = davenport_k(acc).k;
    EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(k.trace(), 0.0, 1e-12);
  }
}

TEST(DavenportK, BilinearFormEqualsTraceObjective) {
  // q^T K q = tr(R(q) Delta) for unit q; this pins the antisymmetric block.
  std::mt19937_64 rng(46);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    DavenportAccumulator acc;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) acc.delta(r, c) = n(rng);
    acc.count = 1;
    const UnitQuaternion q(n(rng), Vec3(n(rng), n(rng), n(rng)));
    const Vec4 qv = q.vector_first();
    EXPECT_NEAR(qv.dot(davenport_k(acc).k * qv), (oracle::quat_matrix(q.w(), q.vec()) * acc.delta).trace(), 1e-12);
  }
}

TEST(QMethod, ScaledIdentityGivesIdentity) {
  DavenportAccumulator acc;
  for (int i = 0; i < 5; ++i) acc = accumulate(acc, Rotation::identity(), Rotation::identity());
  const QMethodSolution sol = solve_qmethod(davenport_k(acc));
  EXPECT_TRUE(sol.q.vector_first().isApprox(Vec4(0, 0, 0, 1), 1e-15));
  EXPECT_NEAR(sol.lambda_max, 15.0, 1e-12);
}

TEST(QMethod, RecoversCalibrationRotation) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const Rotation r_cal = random_rotation(rng);
    DavenportAccumulator acc;
    for (int i = 0; i < 50; ++i) {
      const Rotation r_b = random_rotation(rng);
      acc = accumulate(acc, r_b, r_cal * r_b);
    }
    const QMethodSolution sol = solve_qmethod(davenport_k(acc));
    EXPECT_LT(geodesic_distance(sol.rotation(), r_cal), 1e-9);
    EXPECT_GE(sol.q.w(), 0.0);
  }
}

TEST(QMethod, ZeroDeltaIsAmbiguous) {
  EXPECT_EQ(thrown_code([] { solve_qmethod(davenport_k(DavenportAccumulator{Mat3::Zero(), 2})); }),
            ErrorCode::kAmbiguousAttitude);
}

TEST(QMethod, AgreesWithKabschAndFlippedSignDoesNot) {
  std::mt19937_64 rng(48);
  int flipped_mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Rotation r_cal = random_rotation(rng);
    std::vector<Mat3> rb, rl;
    DavenportAccumulator acc;
    for (int i = 0; i < 5; ++i) {
      const Rotation r_b = random_rotation(rng);
      rb.push_back(r_b.matrix());
      rl.push_back((r_cal * r_b).matrix());
      acc = accumulate(acc, r_b, r_cal * r_b);
    }
    std::vector<Vec3> pb, pl;
    oracle::rotations_to_axis_points(rb, rl, pb, pl);
    const Rotation kabsch = kabsch_align(pb, pl).rotation;
    const Rotation q_sol = solve_qmethod(davenport_k(acc)).rotation();
    EXPECT_LT(geodesic_distance(kabsch, q_sol), 1e-9);
    const Rotation flipped = solve_qmethod(davenport_k_with_sign(acc, LambdaSign::kFlipped)).rotation();
    if (geodesic_distance(kabsch, flipped) > 1e-6) ++flipped_mismatches;
  }
  EXPECT_GT(flipped_mismatches, 90);
}

TEST(QMethod, OptimalCostIsMinusLambda) {
  std::mt19937_64 rng(49);
  for (int trial = 0; trial < 20; ++trial) {
    DavenportAccumulator acc;
    for (int i = 0; i < 10; ++i) acc = accumulate(acc, random_rotation(rng), random_rotation(rng));
    const DavenportMatrix k = davenport_k(acc);
    const QMethodSolution sol = solve_qmethod(k);
    const Vec4 q = sol.q.vector_first();
    EXPECT_NEAR(-q.dot(k.k * q), -sol.lambda_max, 1e-9);
    for (int j = 0; j < 20; ++j) {
      const Vec4 qp = (q + 0.1 * Vec4::Random()).normalized();
      EXPECT_LE(qp.dot(k.k * qp), sol.lambda_max + 1e-12);
    }
  }
}

TEST(QMethod, ConsistentPairLeavesSolutionUnchanged) {
  std::mt19937_64 rng(50);
  const Rotation r_cal = random_rotation(rng);
  DavenportAccumulator acc;
  for (int i = 0; i < 10; ++i) {
    const Rotation r_b = random_rotation(rng);
    acc = accumulate(acc, r_b, r_cal * r_b);
  }
  const UnitQuaternion before = solve_qmethod(davenport_k(acc)).q;
  const Rotation r_b = random_rotation(rng);
  const UnitQuaternion after = solve_qmethod(davenport_k(accumulate(acc, r_b, r_cal * r_b))).q;
  EXPECT_LT((before.vector_first() - after.vector_first()).norm(), 1e-9);
}

}  // namespace
}  // namespace extcal::qmethod
