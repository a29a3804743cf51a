/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#pragma once

#include <functional>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "extcal/geom.hpp"

namespace extcal::lsq {

/// Normal matrices with condition number above this are treated as singular.
inline constexpr double kMaxConditionNumber = 1e12;

/**
 * Stacked system A x = b in three unknowns.
 *
 * `block_covariance`, when set, is the covariance of every consecutive
 * 3-row block of the residual (rows must then be a multiple of 3). When
 * unset the residual is unweighted.
 */
struct LinearSystem {
  Eigen::MatrixX3d a;
  Eigen::VectorXd b;
  std::optional<Mat3> block_covariance;
};

struct Bounds {
  Vec3 lower = Vec3::Constant(-std::numeric_limits<double>::infinity());
  Vec3 upper = Vec3::Constant(std::numeric_limits<double>::infinity());

  static Bounds unbounded() { return Bounds{}; }
  static Bounds box(const Vec3& center, double radius) {
    return Bounds{center.array() - radius, center.array() + radius};
  }
  bool contains(const Vec3& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
};

/// Weighted objective |A x - b|^2_Sigma.
double objective(const LinearSystem& sys, const Vec3& x);

/// Gradient of 1/2 |A x - b|^2_Sigma, i.e. A^T Sigma^-1 (A x - b).
Vec3 gradient(const LinearSystem& sys, const Vec3& x);

/// Unconstrained minimizer via the normal equations. Throws kSingularSystem.
Vec3 solve_weighted_lsq(const LinearSystem& sys);

/// Box-constrained minimizer (active-set). Throws kSingularSystem when the
/// free-variable subproblem is rank deficient, kInvalidArgument on lower > upper.
Vec3 solve_bvls(const LinearSystem& sys, const Bounds& bounds);

struct GaussNewtonStep {
  Eigen::VectorXd delta;
  Eigen::MatrixXd fisher;  ///< J^T Sigma^-1 J at the linearization point
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/**
 * Solves (J^T Sigma^-1 J) dx = -J^T Sigma^-1 r(x_hat).
 *
 * `sigma` is a square block applied block-diagonally along the residual, so a
 * 1x1 sigma weights every row and a 3x3 sigma weights every 3-vector.
 */
GaussNewtonStep gauss_newton_step(const ResidualFn& residual, const JacobianFn& jacobian,
                                  const Eigen::VectorXd& x_hat, const Eigen::MatrixXd& sigma);

}  // namespace extcal::lsq
