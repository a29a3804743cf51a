/*
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE for more information.
 */

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the solver under test except through explicit inputs.

#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "extcal/geom.hpp"
#include "extcal/lsq.hpp"

namespace extcal::oracle {

inline Mat3 rot_axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline Mat3 random_rotation_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

// Component form of the quaternion product under the convention where
// R(p (x) q) = R(p) R(q) and R(q) = (s^2 - v.v) I + 2 v v^T - 2 s [v]x.
// Returns (w, v).
inline std::pair<double, Vec3> quat_product(double pw, const Vec3& pv, double qw, const Vec3& qv) {
  return {pw * qw - pv.dot(qv), pw * qv + qw * pv - pv.cross(qv)};
}

// The same rotation matrix written out term by term.
inline Mat3 quat_matrix(double w, const Vec3& v) {
  Mat3 vx;
  vx << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return (w * w - v.squaredNorm()) * Mat3::Identity() + 2.0 * v * v.transpose() - 2.0 * w * vx;
}

struct Rk4State {
  Mat3 r = Mat3::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
};

// Dense RK4 on R' = R [w]x, v' = R f, p' = v with constant body-frame inputs.
inline Rk4State rk4_integrate(const Vec3& omega, const Vec3& force, double duration, int steps) {
  Mat3 wx;
  wx << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(), omega.x(), 0;
  auto deriv = [&](const Rk4State& s) {
    return Rk4State{s.r * wx, s.r * force, s.v};
  };
  auto axpy = [](const Rk4State& s, const Rk4State& d, double h) {
    return Rk4State{s.r + h * d.r, s.v + h * d.v, s.p + h * d.p};
  };
  Rk4State s;
  const double h = duration / steps;
  for (int i = 0; i < steps; ++i) {
    const Rk4State k1 = deriv(s);
    const Rk4State k2 = deriv(axpy(s, k1, h / 2));
    const Rk4State k3 = deriv(axpy(s, k2, h / 2));
    const Rk4State k4 = deriv(axpy(s, k3, h));
    s.r += h / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r);
    s.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    s.p += h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
  }
  return s;
}

inline double ls_objective(const Eigen::MatrixX3d& a, const Eigen::VectorXd& b, const Vec3& x) {
  return (a * x - b).squaredNorm();
}

// Exact box-constrained least squares by enumerating every face of the box:
// each coordinate is free, at its lower bound or at its upper bound.
inline Vec3 bvls_by_enumeration(const Eigen::MatrixX3d& a, const Eigen::VectorXd& b, const Vec3& lo,
                                const Vec3& hi) {
  double best = std::numeric_limits<double>::infinity();
  Vec3 best_x = Vec3::Zero();
  for (int code = 0; code < 27; ++code) {
    std::array<int, 3> st{code % 3, (code / 3) % 3, code / 9};  // 0 free, 1 lower, 2 upper
    Vec3 x = Vec3::Zero();
    std::vector<int> free;
    for (int i = 0; i < 3; ++i) {
      if (st[i] == 1) x(i) = lo(i);
      if (st[i] == 2) x(i) = hi(i);
      if (st[i] == 0) free.push_back(i);
    }
    if (!free.empty()) {
      Eigen::MatrixXd af(a.rows(), static_cast<Eigen::Index>(free.size()));
      for (std::size_t j = 0; j < free.size(); ++j) af.col(static_cast<Eigen::Index>(j)) = a.col(free[j]);
      const Eigen::VectorXd rhs = b - a * x;
      const Eigen::VectorXd xf = af.colPivHouseholderQr().solve(rhs);
      for (std::size_t j = 0; j < free.size(); ++j) x(free[j]) = xf(static_cast<Eigen::Index>(j));
    }
    if (((x.array() < lo.array() - 1e-12) || (x.array() > hi.array() + 1e-12)).any()) continue;
    const double f = ls_objective(a, b, x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

// Rotation sensitivity objective as a function of the base-side noise eta:
// |eta|_F^2 + |(R_BL R_B - R_L) + R_BL eta|_F^2.
inline double rotation_sensitivity(const Mat3& r_bl, const Mat3& r_b, const Mat3& r_l, const Mat3& eta) {
  return eta.squaredNorm() + ((r_bl * r_b - r_l) + r_bl * eta).squaredNorm();
}

// Translation sensitivity objective: |d_B|^2 + |d_L|^2 where d_L is the lidar
// noise that keeps the hand-eye translation relation exact.
inline double translation_sensitivity(const Mat3& r_bl, const Vec3& t_bl, const Mat3& r_b_rel, const Vec3& t_b_rel,
                                      const Vec3& t_l_rel, const Vec3& d_b) {
  const Vec3 d_l = r_bl.transpose() * ((r_b_rel - Mat3::Identity()) * t_bl) + r_bl.transpose() * (t_b_rel + d_b) -
                   t_l_rel;
  return d_b.squaredNorm() + d_l.squaredNorm();
}

// Central-difference gradient of a scalar function of n variables. The
// sensitivity objectives are quadratic, so central differences carry no
// truncation error and a wide step keeps cancellation below 1e-11.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double h = 1e-3) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

// Rotation pairs turned into point pairs: the three frame axes of each.
inline void rotations_to_axis_points(const std::vector<Mat3>& r_b, const std::vector<Mat3>& r_l,
                                     std::vector<Vec3>& pts_b, std::vector<Vec3>& pts_l) {
  for (std::size_t i = 0; i < r_b.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      pts_b.push_back(r_b[i].col(k));
      pts_l.push_back(r_l[i].col(k));
    }
  }
}

}  // namespace extcal::oracle
