/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/qmethod.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "extcal/errors.hpp"

namespace extcal::qmethod {

Transform kabsch_align(std::span<const Vec3> points_b, std::span<const Vec3> points_l) {
  if (points_b.size() != points_l.size()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "point sets differ in size");
  }
  if (points_b.size() < 3) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "at least 3 point pairs are required");
  }
  const double n = static_cast<double>(points_b.size());
  Vec3 mean_b = Vec3::Zero();
  Vec3 mean_l = Vec3::Zero();
  for (std::size_t i = 0; i < points_b.size(); ++i) {
    mean_b += points_b[i];
    mean_l += points_l[i];
  }
  mean_b /= n;
  mean_l /= n;

  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < points_b.size(); ++i) {
    cov += (points_b[i] - mean_b) * (points_l[i] - mean_l).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-9 * s(0)) {
    throw CalibrationError(ErrorCode::kDegenerateGeometry, "point sets are collinear");
  }
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  Transform out;
  out.rotation = Rotation::project(v * d * u.transpose());
  out.translation = mean_l - out.rotation * mean_b;
  return out;
}

DavenportAccumulator accumulate(DavenportAccumulator acc, const Rotation& r_b, const Rotation& r_l) {
  acc.delta += r_b.matrix() * r_l.matrix().transpose();
  ++acc.count;
  return acc;
}

DavenportMatrix davenport_k_with_sign(const DavenportAccumulator& acc, LambdaSign sign) {
  const Mat3& d = acc.delta;
  const Mat3 gamma = d + d.transpose();
  const double mu = d.trace();
  Vec3 lambda(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  if (sign == LambdaSign::kFlipped) lambda = -lambda;

  DavenportMatrix out;
  out.k.topLeftCorner<3, 3>() = gamma - mu * Mat3::Identity();
  out.k.topRightCorner<3, 1>() = lambda;
  out.k.bottomLeftCorner<1, 3>() = lambda.transpose();
  out.k(3, 3) = mu;
  return out;
}

DavenportMatrix davenport_k(const DavenportAccumulator& acc) {
  return davenport_k_with_sign(acc, LambdaSign::kTraceExpansion);
}

QMethodSolution solve_qmethod(const DavenportMatrix& k) {
  const Mat4 sym = 0.5 * (k.k + k.k.transpose());
  Eigen::SelfAdjointEigenSolver<Mat4> es(sym);
  if (es.info() != Eigen::Success) {
    throw CalibrationError(ErrorCode::kAmbiguousAttitude, "eigendecomposition failed");
  }
  // eigenvalues are sorted ascending
  const Vec4& ev = es.eigenvalues();
  if (ev(3) - ev(2) < kMinEigengap) {
    throw CalibrationError(ErrorCode::kAmbiguousAttitude,
                           "largest eigenvalue of the Davenport matrix is not simple");
  }
  QMethodSolution out;
  out.q = UnitQuaternion::from_vector_first(es.eigenvectors().col(3)).canonical();
  out.lambda_max = ev(3);
  return out;
}

}  // namespace extcal::qmethod
