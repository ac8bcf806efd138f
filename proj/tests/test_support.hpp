#pragma once

#include <filesystem>
#include <functional>
#include <random>

#include "pcbf/dynamics.hpp"
#include "pcbf/robot_model.hpp"

namespace pcbf::test {

inline std::filesystem::path data_dir() { return PCBF_TEST_DATA_DIR; }

inline const RobotModel& franka() {
  static const RobotModel model = load_robot_model(data_dir() / "robots" / "franka_like.json");
  return model;
}

inline RobotModel two_link(double l1 = 0.7, double l2 = 0.5, double m1 = 1.3, double m2 = 0.8) {
  const double lengths[] = {l1, l2};
  const double masses[] = {m1, m2};
  return make_planar_arm(lengths, masses);
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return Vec::NullaryExpr(n, [&] { return g(rng); });
}

/// Uniform inside the joint limits, shrunk towards the middle by `shrink`.
inline Vec random_q(const RobotModel& m, std::mt19937_64& rng, double shrink = 0.9) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const Vec lo = m.lower_limits(), hi = m.upper_limits();
  return 0.5 * (lo + hi) + shrink * (hi - lo).cwiseProduct(Vec::NullaryExpr(lo.size(), [&] { return u(rng); }));
}

/// Central-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return g;
}

/// Central-difference Jacobian of a vector function.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  Vec xp = x, xm = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = xm[i] = x[i];
  }
  return J;
}

/// Total mechanical energy: kinetic plus potential (-sum m_i g . p_com,i).
inline double mechanical_energy(const RobotModel& m, const Vec& q, const Vec& qd) {
  const LinkFrames f = forward_kinematics(m, q);
  double potential = 0.0;
  for (std::size_t i = 0; i < m.links.size(); ++i)
    potential -= m.links[i].mass * m.gravity.dot(f.frames[i + 1] * m.links[i].com);
  return 0.5 * qd.dot(mass_matrix(m, q) * qd) + potential;
}

}  // namespace pcbf::test
