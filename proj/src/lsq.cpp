/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

#include "extcal/lsq.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "extcal/errors.hpp"

namespace extcal::lsq {

namespace {

// Applies L^-1 (Sigma = L L^T) to every consecutive block of rows.
Eigen::MatrixXd whiten_rows(const Eigen::MatrixXd& m, const Eigen::MatrixXd& sigma) {
  const Eigen::Index block = sigma.rows();
  if (sigma.cols() != block || block == 0 || m.rows() % block != 0) {
    throw CalibrationError(ErrorCode::kInvalidArgument,
                           "residual rows must be a multiple of the covariance block size");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "covariance is not positive definite");
  }
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); r += block) {
    out.middleRows(r, block) = llt.matrixL().solve(m.middleRows(r, block));
  }
  return out;
}

struct Whitened {
  Eigen::MatrixX3d a;
  Eigen::VectorXd b;
};

Whitened whiten(const LinearSystem& sys) {
  if (sys.a.rows() != sys.b.rows()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "row counts of A and b differ");
  }
  if (!sys.block_covariance) {
    return {sys.a, sys.b};
  }
  const Eigen::MatrixXd sigma = *sys.block_covariance;
  Whitened w;
  w.a = whiten_rows(sys.a, sigma);
  w.b = whiten_rows(sys.b, sigma);
  return w;
}

// Rejects normal matrices whose condition number exceeds kMaxConditionNumber.
void require_well_conditioned(const Eigen::MatrixXd& normal, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(normal, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > hi / kMaxConditionNumber)) {
    throw CalibrationError(ErrorCode::kSingularSystem, what);
  }
}

enum class Status { kFree, kLower, kUpper, kFixed };

}  // namespace

double objective(const LinearSystem& sys, const Vec3& x) {
  const Whitened w = whiten(sys);
  return (w.a * x - w.b).squaredNorm();
}

Vec3 gradient(const LinearSystem& sys, const Vec3& x) {
  const Whitened w = whiten(sys);
  return w.a.transpose() * (w.a * x - w.b);
}

Vec3 solve_weighted_lsq(const LinearSystem& sys) {
  const Whitened w = whiten(sys);
  const Mat3 normal = w.a.transpose() * w.a;
  require_well_conditioned(normal, "normal matrix is rank deficient");
  return normal.ldlt().solve(w.a.transpose() * w.b);
}

Vec3 solve_bvls(const LinearSystem& sys, const Bounds& bounds) {
  if (!(bounds.lower.array() <= bounds.upper.array()).all()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "lower bound exceeds upper bound");
  }
  const Whitened w = whiten(sys);
  // minimize 1/2 x^T H x - g^T x over the box
  const Mat3 h = w.a.transpose() * w.a;
  const Vec3 g = w.a.transpose() * w.b;
  const double kkt_tol = 1e-14 * std::max(1.0, h.cwiseAbs().maxCoeff() + g.cwiseAbs().maxCoeff());

  std::array<Status, 3> status{};
  Vec3 x;
  for (int i = 0; i < 3; ++i) {
    if (bounds.lower(i) == bounds.upper(i)) {
      status[i] = Status::kFixed;
      x(i) = bounds.lower(i);
    } else if (bounds.lower(i) > 0.0) {
      status[i] = Status::kLower;
      x(i) = bounds.lower(i);
    } else if (bounds.upper(i) < 0.0) {
      status[i] = Status::kUpper;
      x(i) = bounds.upper(i);
    } else {
      status[i] = Status::kFree;
      x(i) = 0.0;
    }
  }

  constexpr int kMaxIterations = 64;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    std::vector<int> free;
    for (int i = 0; i < 3; ++i) {
      if (status[i] == Status::kFree) free.push_back(i);
    }

    Vec3 z = x;
    if (!free.empty()) {
      const auto n = static_cast<Eigen::Index>(free.size());
      Eigen::MatrixXd hff(n, n);
      Eigen::VectorXd rhs(n);
      for (Eigen::Index r = 0; r < n; ++r) {
        rhs(r) = g(free[r]);
        for (int j = 0; j < 3; ++j) {
          if (status[j] != Status::kFree) rhs(r) -= h(free[r], j) * x(j);
        }
        for (Eigen::Index c = 0; c < n; ++c) hff(r, c) = h(free[r], free[c]);
      }
      require_well_conditioned(hff, "free-variable subproblem is rank deficient");
      const Eigen::VectorXd zf = hff.ldlt().solve(rhs);
      for (Eigen::Index r = 0; r < n; ++r) z(free[r]) = zf(r);
    }

    if (bounds.contains(z)) {
      x = z;
      const Vec3 grad = h * x - g;
      int release = -1;
      double worst = kkt_tol;
      for (int i = 0; i < 3; ++i) {
        // At the lower bound the gradient must not point into the box, and
        // vice versa at the upper bound.
        const double violation = status[i] == Status::kLower   ? -grad(i)
                                 : status[i] == Status::kUpper ? grad(i)
                                                               : 0.0;
        if (violation > worst) {
          worst = violation;
          release = i;
        }
      }
      if (release < 0) return x;
      status[release] = Status::kFree;
      continue;
    }

    // Step towards z until the first free variable hits its bound.
    double alpha = 1.0;
    int blocking = -1;
    for (int i : free) {
      const double step = z(i) - x(i);
      double limit = 1.0;
      if (z(i) < bounds.lower(i)) {
        limit = (bounds.lower(i) - x(i)) / step;
      } else if (z(i) > bounds.upper(i)) {
        limit = (bounds.upper(i) - x(i)) / step;
      } else {
        continue;
      }
      if (limit < alpha) {
        alpha = limit;
        blocking = i;
      }
    }
    alpha = std::clamp(alpha, 0.0, 1.0);
    for (int i : free) x(i) += alpha * (z(i) - x(i));
    for (int i : free) {
      if (i == blocking || x(i) <= bounds.lower(i) || x(i) >= bounds.upper(i)) {
        const bool at_lower = i == blocking ? z(i) < bounds.lower(i) : x(i) <= bounds.lower(i);
        status[i] = at_lower ? Status::kLower : Status::kUpper;
        x(i) = at_lower ? bounds.lower(i) : bounds.upper(i);
      }
    }
  }
  throw CalibrationError(ErrorCode::kNotConverged,
                         "active-set iteration limit reached (" + std::to_string(kMaxIterations) + ")");
}

GaussNewtonStep gauss_newton_step(const ResidualFn& residual, const JacobianFn& jacobian,
                                  const Eigen::VectorXd& x_hat, const Eigen::MatrixXd& sigma) {
  const Eigen::VectorXd r = residual(x_hat);
  const Eigen::MatrixXd j = jacobian(x_hat);
  if (j.rows() != r.rows() || j.cols() != x_hat.rows()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "jacobian shape does not match residual and state");
  }
  if (!j.allFinite() || !r.allFinite()) {
    throw CalibrationError(ErrorCode::kInvalidArgument, "non-finite residual or jacobian");
  }
  const Eigen::MatrixXd jw = whiten_rows(j, sigma);
  const Eigen::MatrixXd rw = whiten_rows(r, sigma);

  GaussNewtonStep step;
  step.fisher = jw.transpose() * jw;
  require_well_conditioned(step.fisher, "Fisher information matrix is rank deficient");
  step.delta = -step.fisher.ldlt().solve(jw.transpose() * rw);
  return step;
}

}  // namespace extcal::lsq
