#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pcbf/dynamics.hpp"
#include "test_support.hpp"
#include "two_link_oracle.hpp"

namespace pcbf {
namespace {

using test::franka;
using test::two_link;
using test::TwoLinkOracle;

double rel_err(const Mat& a, const Mat& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

TEST(Kinematics, PlanarTwoLinkPoses) {
  const RobotModel m = two_link(1.0, 1.0, 1.0, 1.0);
  EXPECT_LT((task_position(m, Vec::Zero(2)) - Eigen::Vector2d(2, 0)).norm(), 1e-14);
  EXPECT_LT((task_position(m, Eigen::Vector2d(M_PI / 2, 0)) - Eigen::Vector2d(0, 2)).norm(), 1e-14);
  Mat expected(2, 2);
  expected << 0, 0, 2, 1;
  EXPECT_LT((jacobian(m, Vec::Zero(2)) - expected).norm(), 1e-14);
}

TEST(Kinematics, MatchesNaiveTransformChain) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec q = test::random_q(m, rng);
    Mat3 r = Mat3::Identity();
    Vec3 p = Vec3::Zero();
    for (std::size_t i = 0; i < m.dof(); ++i) {
      p += r * m.joints[i].origin_xyz;
      r = r * m.joints[i].origin_rotation * Eigen::AngleAxisd(q[i], m.joints[i].axis).toRotationMatrix();
    }
    p += r * m.ee_offset;
    EXPECT_LT((task_position(m, q) - p).norm(), 1e-12);
  }
}

TEST(Kinematics, JacobianMatchesFiniteDifferences) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const Vec q = test::random_q(m, rng);
    const Mat J = jacobian(m, q);
    const Mat fd = test::fd_jacobian([&](const Vec& v) { return task_position(m, v); }, q);
    EXPECT_LT((J - fd).norm() / J.norm(), 1e-6);
    EXPECT_LT((J * Vec::Zero(7)).norm(), 1e-15);
  }
}

TEST(Dynamics, PendulumInertiaAndEquilibrium) {
  const double l[] = {0.8}, mass[] = {2.5};
  const RobotModel m = make_planar_arm(l, mass);
  EXPECT_NEAR(mass_matrix(m, Vec::Zero(1))(0, 0), 2.5 * 0.64, 1e-10);
  // Hanging straight down is q = -pi/2 for a planar arm with gravity along -y.
  const Vec down = Vec::Constant(1, -M_PI / 2);
  EXPECT_NEAR(gravity_vector(m, down)[0], 0.0, 1e-12);
  EXPECT_NEAR(forward_dynamics(m, down, Vec::Zero(1), Vec::Zero(1), Vec::Zero(1))[0], 0.0, 1e-10);

  RobotModel weightless = m;
  weightless.gravity.setZero();
  const Vec qdd = forward_dynamics(weightless, Vec::Constant(1, 0.3), Vec::Zero(1), Vec::Constant(1, 1.7), Vec::Zero(1));
  EXPECT_NEAR(qdd[0], 1.7 / (2.5 * 0.64), 1e-9);
  EXPECT_LT(bias_forces(weightless, Vec::Constant(1, 0.3), Vec::Zero(1)).norm(), 1e-15);
}

TEST(Dynamics, TwoLinkMatchesLagrangian) {
  const TwoLinkOracle o{0.7, 0.5, 1.3, 0.8};
  const RobotModel m = two_link(o.l1, o.l2, o.m1, o.m2);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const Vec q = test::random_vec(rng, 2, 2.0), qd = test::random_vec(rng, 2, 2.0);
    EXPECT_LT(rel_err(mass_matrix(m, q), o.H(q)), 1e-8);
    EXPECT_LT(rel_err(bias_forces(m, q, qd), o.bias(q, qd)), 1e-8);
  }
}

TEST(Dynamics, MassMatrixSymmetricPositiveDefinite) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10000; ++k) {
    const Vec q = test::random_q(m, rng, 1.0);
    const Mat H = mass_matrix(m, q);
    ASSERT_LT((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_EQ(Eigen::LLT<Mat>(H).info(), Eigen::Success);
  }
}

TEST(Dynamics, RneaMatchesCrba) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Vec q = test::random_q(m, rng), qd = test::random_vec(rng, 7), qdd = test::random_vec(rng, 7);
    const Vec tau = inverse_dynamics(m, q, qd, qdd);
    EXPECT_LT((mass_matrix(m, q) * qdd + bias_forces(m, q, qd) - tau).norm() / std::max(1.0, tau.norm()), 1e-10);
  }
}

TEST(Dynamics, ForwardDynamicsResidual) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    const Vec q = test::random_q(m, rng), qd = test::random_vec(rng, 7);
    const Vec tau = test::random_vec(rng, 7, 10.0), ext = test::random_vec(rng, 7, 5.0);
    const Vec qdd = forward_dynamics(m, q, qd, tau, ext);
    EXPECT_LT((mass_matrix(m, q) * qdd + bias_forces(m, q, qd) - tau - ext).norm(), 1e-9);
  }
}

TEST(Dynamics, ForwardDynamicsRejectsBadInput) {
  EXPECT_THROW(forward_dynamics(franka(), Vec::Zero(6), Vec::Zero(7), Vec::Zero(7), Vec::Zero(7)),
               std::invalid_argument);
}

TEST(Dynamics, EnergyConservedWithoutDamping) {
  const RobotModel& m = franka();
  const Vec q0 = (Vec(7) << 0.2, -0.5, 0.3, -2.0, 0.1, 1.5, 0.4).finished();
  const Vec qd0 = (Vec(7) << 0.5, -0.3, 0.4, 0.2, -0.6, 0.3, 0.8).finished();
  const Vec zero = Vec::Zero(7);
  auto deriv = [&](const Vec& q, const Vec& qd) { return forward_dynamics(m, q, qd, zero, zero); };
  Vec q = q0, qd = qd0;
  const double e0 = test::mechanical_energy(m, q, qd);
  double max_kinetic = 0.5 * qd.dot(mass_matrix(m, q) * qd), drift = 0.0;
  const double dt = 1e-3;
  for (int k = 0; k < 1000; ++k) {
    const Vec k1q = qd, k1v = deriv(q, qd);
    const Vec k2q = qd + 0.5 * dt * k1v, k2v = deriv(q + 0.5 * dt * k1q, k2q);
    const Vec k3q = qd + 0.5 * dt * k2v, k3v = deriv(q + 0.5 * dt * k2q, k3q);
    const Vec k4q = qd + dt * k3v, k4v = deriv(q + dt * k3q, k4q);
    q += dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
    qd += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    max_kinetic = std::max(max_kinetic, 0.5 * qd.dot(mass_matrix(m, q) * qd));
    drift = std::max(drift, std::abs(test::mechanical_energy(m, q, qd) - e0));
  }
  EXPECT_LT(drift / max_kinetic, 1e-3);
}

TEST(Manipulability, TwoLinkClosedForm) {
  const RobotModel m = two_link(1.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR(manipulability_index(m, Eigen::Vector2d(0.4, M_PI / 2)), 1.0, 1e-12);
  EXPECT_NEAR(manipulability_index(m, Eigen::Vector2d(0.4, 0.0)), 0.0, 1e-12);
  const Vec g = manipulability_gradient(m, Eigen::Vector2d(0.4, M_PI / 2));
  EXPECT_NEAR(g[0], 0.0, 1e-8);
  EXPECT_NEAR(g[1], 0.0, 1e-8);
  const RobotModel m2 = two_link(0.7, 0.5, 1.0, 1.0);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Vec q = test::random_vec(rng, 2, 1.5);
    if (std::abs(std::sin(q[1])) < 0.1) continue;
    EXPECT_NEAR(manipulability_index(m2, q), 0.35 * std::abs(std::sin(q[1])), 1e-12);
    const Vec grad = manipulability_gradient(m2, q);
    EXPECT_NEAR(grad[0], 0.0, 1e-7);
    EXPECT_NEAR(grad[1], 0.35 * std::cos(q[1]) * (std::sin(q[1]) > 0 ? 1 : -1), 1e-7);
  }
}

TEST(Manipulability, MatchesSingularValueProduct) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(10);
  for (int k = 0; k < 100; ++k) {
    const Vec q = test::random_q(m, rng);
    const Eigen::JacobiSVD<Mat> svd(jacobian(m, q));
    const double prod = svd.singularValues().prod();
    EXPECT_LT(std::abs(manipulability_index(m, q) - prod) / prod, 1e-8);
  }
}

TEST(Manipulability, GradientMatchesFiniteDifferences) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 30) {
    const Vec q = test::random_q(m, rng);
    if (manipulability_index(m, q) <= 0.05) continue;
    const Vec fd = test::fd_gradient([&](const Vec& v) { return manipulability_index(m, v); }, q);
    EXPECT_LT((manipulability_gradient(m, q) - fd).norm() / fd.norm(), 1e-4);
    ++checked;
  }
}

TEST(Manipulability, GradientRefusesIllConditionedJacobian) {
  const RobotModel m = two_link(1.0, 1.0, 1.0, 1.0);
  EXPECT_THROW(manipulability_gradient(m, Eigen::Vector2d(0.3, 0.0)), NumericalError);
}

TEST(PseudoInverse, Identities) {
  EXPECT_LT((damped_pinv(Mat::Identity(3, 3), 0.0) - Mat::Identity(3, 3)).norm(), 1e-15);
  std::mt19937_64 rng(12);
  const Mat J = Mat::NullaryExpr(3, 7, [&] { return std::normal_distribution<double>()(rng); });
  EXPECT_LT((J * damped_pinv(J, 0.0) - Mat::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LT((damped_pinv_transpose(J, 0.0) - damped_pinv(J, 0.0).transpose()).norm(), 1e-12);

  Mat rank1(3, 7);
  rank1 = J.row(0).replicate(3, 1);
  const double lambda = 1e-3;
  const Mat p = damped_pinv(rank1, lambda);
  ASSERT_TRUE(p.allFinite());
  // sigma / (sigma^2 + lambda^2) <= 1 / (2 lambda)
  EXPECT_LE(Eigen::JacobiSVD<Mat>(p).singularValues()[0], 1.0 / (2.0 * lambda) + 1e-9);
}

TEST(PseudoInverse, AdaptiveDampingSchedule) {
  EXPECT_DOUBLE_EQ(adaptive_damping(0.5, 0.1), 1e-4);
  EXPECT_DOUBLE_EQ(adaptive_damping(0.2, 0.1), 1e-4);
  EXPECT_NEAR(adaptive_damping(0.0, 0.1), 1e-4 + 0.05, 1e-15);
  EXPECT_GT(adaptive_damping(0.05, 0.1), adaptive_damping(0.15, 0.1));
}

TEST(Dynamics, TaskInertiaIsInverseOfMobility) {
  const RobotModel& m = franka();
  std::mt19937_64 rng(13);
  const Vec q = test::random_q(m, rng);
  const Mat J = jacobian(m, q), H = mass_matrix(m, q);
  const Mat L = task_inertia(J, H);
  EXPECT_LT((L * J * H.inverse() * J.transpose() - Mat::Identity(3, 3)).norm(), 1e-9);
}

}  // namespace
}  // namespace pcbf
