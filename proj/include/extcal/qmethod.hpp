/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <span>

#include "extcal/geom.hpp"

namespace extcal::qmethod {

/// Running attitude profile matrix sum_i R_b,i R_l,i^T.
struct DavenportAccumulator {
  Mat3 delta = Mat3::Zero();
  int count = 0;
};

struct DavenportMatrix {
  Mat4 k;  ///< acts on vector-first quaternions [qv; qs]
};

struct QMethodSolution {
  UnitQuaternion q;     ///< canonical, scalar-first
  double lambda_max = 0.0;
  Rotation rotation() const { return quat_to_rotation(q); }
};

/// Eigengap below which the optimal attitude is reported as ambiguous.
inline constexpr double kMinEigengap = 1e-9;

/**
 * Rigid alignment (R, t) minimizing sum |R b_i + t - l_i|^2 via SVD of the
 * cross-covariance, with the reflection case corrected so det(R) = +1.
 *
 * Throws kInvalidArgument on size mismatch or fewer than 3 points and
 * kDegenerateGeometry when the points are (nearly) collinear.
 */
Transform kabsch_align(std::span<const Vec3> points_b, std::span<const Vec3> points_l);

DavenportAccumulator accumulate(DavenportAccumulator acc, const Rotation& r_b, const Rotation& r_l);

/**
 * K = [ Gamma - mu I   Lambda ]   Gamma = Delta + Delta^T, mu = tr(Delta)
 *     [ Lambda^T       mu     ]
 *
 * so that q^T K q = tr(R(q) Delta) for unit q. With the quaternion convention
 * of quat_to_rotation this requires
 *   Lambda = (D32 - D23, D13 - D31, D21 - D12)
 * (1-based indices). The opposite sign yields the transposed attitude; see
 * davenport_k_with_sign, used by the tests that pin this choice.
 */
DavenportMatrix davenport_k(const DavenportAccumulator& acc);

enum class LambdaSign {
  kTraceExpansion,  ///< (D32 - D23, D13 - D31, D21 - D12), used by davenport_k
  kFlipped,         ///< (D23 - D32, D31 - D13, D12 - D21)
};

DavenportMatrix davenport_k_with_sign(const DavenportAccumulator& acc, LambdaSign sign);

/**
 * Eigenvector of the largest eigenvalue of K as a canonical quaternion; the
 * rotation maximizes tr(R Delta), i.e. minimizes sum |R R_b,i - R_l,i|_F^2.
 * Throws kAmbiguousAttitude when the top two eigenvalues are within kMinEigengap.
 */
QMethodSolution solve_qmethod(const DavenportMatrix& k);

}  // namespace extcal::qmethod
