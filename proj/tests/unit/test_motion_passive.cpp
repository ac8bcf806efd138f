#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pcbf/motion_plan.hpp"
#include "pcbf/passive_control.hpp"
#include "test_support.hpp"

namespace pcbf {
namespace {

const Vec3 kAttractor(0.0, 0.0, 0.3);

TEST(MotionPlan, LinearFieldValues) {
  const LinearDS ds = LinearDS::isotropic(kAttractor, 25.0);
  EXPECT_LT(eval_ds(ds, kAttractor).norm(), 1e-15);
  EXPECT_LT((eval_ds(ds, kAttractor + Vec3(0.1, 0, 0)) - Vec3(-5, 0, 0)).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(potential(ds, kAttractor), 0.0);
  EXPECT_NEAR(potential(ds, kAttractor + Vec3(0.0, 0.06, 0.08)), 0.25, 1e-12);
}

TEST(MotionPlan, FieldIsNegativePotentialGradient) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 50; ++k) {
    Mat a = Mat::NullaryExpr(3, 3, [&] { return std::normal_distribution<double>()(rng); });
    LinearDS ds{test::random_vec(rng, 3), a * a.transpose() + 0.5 * Mat::Identity(3, 3)};
    ds.validate();
    const Vec x = test::random_vec(rng, 3);
    const Vec fd = test::fd_gradient([&](const Vec& v) { return potential(ds, v); }, x);
    const Vec f = eval_ds(ds, x);
    EXPECT_LT((fd + f).norm() / f.norm(), 1e-8);
    EXPECT_LT(f.dot(x - ds.attractor), 0.0);
  }
}

TEST(MotionPlan, RejectsIndefiniteGain) {
  LinearDS ds{kAttractor, Mat::Identity(3, 3)};
  ds.gain(2, 2) = -1.0;
  EXPECT_THROW(ds.validate(), std::invalid_argument);
  ds.gain = Mat::Identity(2, 2);
  EXPECT_THROW(ds.validate(), std::invalid_argument);
}

TEST(Damping, BasisCases) {
  EXPECT_LT((damping_basis(Vec3(1, 0, 0)) - Mat::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LT((damping_basis(Vec3::Zero()) - Mat::Identity(3, 3)).norm(), 1e-15);
  std::mt19937_64 rng(22);
  for (int k = 0; k < 1000; ++k) {
    const Vec f = test::random_vec(rng, 3);
    const Mat v = damping_basis(f);
    ASSERT_LT((v.transpose() * v - Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_LT((v.col(0) - f.normalized()).norm(), 1e-12);
  }
}

TEST(Damping, MatrixEigenvalues) {
  const DampingSpec iso{Vec3(4, 4, 4)};
  std::mt19937_64 rng(23);
  EXPECT_LT((damping_matrix(damping_basis(test::random_vec(rng, 3)), iso) - 4 * Mat::Identity(3, 3)).norm(), 1e-12);
  const DampingSpec aniso{Vec3(2, 1, 1)};
  EXPECT_LT((damping_matrix(damping_basis(Vec3(0.3, 0, 0)), aniso) - Vec3(2, 1, 1).asDiagonal().toDenseMatrix()).norm(),
            1e-14);
  for (int k = 0; k < 200; ++k) {
    const DampingSpec spec{test::random_vec(rng, 3).cwiseAbs()};
    const Mat d = damping_matrix(damping_basis(test::random_vec(rng, 3)), spec);
    Vec expected = spec.lambdas;
    std::sort(expected.data(), expected.data() + 3);
    ASSERT_LT((Eigen::SelfAdjointEigenSolver<Mat>(d).eigenvalues() - expected).norm(), 1e-10);
  }
}

TEST(ControlForce, TrackingAndErrorDirections) {
  const LinearDS ds = LinearDS::isotropic(kAttractor, 25.0);
  const DampingSpec spec{Vec3(60, 35, 35)};
  const Vec3 x = kAttractor + Vec3(-0.04, 0, 0);  // f = [2, 0, 0]
  const Vec3 g(0.5, -1.0, 2.0);
  const Vec f = eval_ds(ds, x);
  EXPECT_LT(control_force(x, f, ds, spec, Vec3::Zero()).norm(), 1e-12);
  EXPECT_LT((control_force(x, Vec3::Zero(), ds, spec, g) - g - Vec3(60 * 2.0, 0, 0)).norm(), 1e-12);
  const Vec3 e(0, 0.3, -0.2);
  EXPECT_LT((control_force(x, f + e, ds, spec, Vec3::Zero()) + 35.0 * e).norm(), 1e-12);
}

TEST(Storage, QuadraticForms) {
  const LinearDS ds = LinearDS::isotropic(kAttractor, 25.0);
  EXPECT_DOUBLE_EQ(storage(kAttractor, Vec3::Zero(), Mat::Identity(3, 3), 60, ds), 0.0);
  std::mt19937_64 rng(24);
  for (int k = 0; k < 50; ++k) {
    Mat a = Mat::NullaryExpr(3, 3, [&] { return std::normal_distribution<double>()(rng); });
    const Mat hx = a * a.transpose() + 0.1 * Mat::Identity(3, 3);
    const Vec xd = test::random_vec(rng, 3), x = test::random_vec(rng, 3);
    double kinetic = 0.0, pot = 0.0;
    for (int i = 0; i < 3; ++i) {
      pot += 25.0 * (x[i] - kAttractor[i]) * (x[i] - kAttractor[i]);
      for (int j = 0; j < 3; ++j) kinetic += 0.5 * xd[i] * hx(i, j) * xd[j];
    }
    EXPECT_NEAR(storage(kAttractor, xd, hx, 60, ds), kinetic, 1e-10);
    EXPECT_NEAR(storage(x, xd, hx, 60, ds), kinetic + 60.0 * pot, 1e-10);
  }
  EXPECT_THROW(storage(kAttractor, Vec3::Zero(), -Mat::Identity(3, 3), 60, ds), NumericalError);
}

TEST(Passivity, StepBookkeeping) {
  PassivityTrace trace;
  passivity_step(trace, 0.001, 1.0, 2.0, 1e-3, Vec3(1, 0, 0), Vec3(1, 0, 0), false);
  EXPECT_EQ(trace.violations, 0u);
  EXPECT_FALSE(trace.records.back().violation);
  passivity_step(trace, 0.002, 2.0, 2.0, 1e-3, Vec3(1, 0, 0), Vec3(0.5, 0, 0), true);
  EXPECT_EQ(trace.violations, 0u);
  passivity_step(trace, 0.003, 2.0, 2.1, 1e-3, Vec3::Zero(), Vec3(0.5, 0, 0), true);
  EXPECT_EQ(trace.violations, 1u);
  EXPECT_EQ(trace.feasible_steps(), 2u);
  EXPECT_DOUBLE_EQ(trace.feasible_satisfied_fraction(), 0.5);
  std::ostringstream csv;
  trace.write_csv(csv);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_THROW(passivity_step(trace, 0, 0, 0, 0.0, Vec3::Zero(), Vec3::Zero(), true), std::invalid_argument);
}

// Point mass in task space under F = -D (xdot - f): storage must not grow.
TEST(Passivity, PointMassClosedLoopDissipates) {
  const LinearDS ds = LinearDS::isotropic(kAttractor, 10.0);
  const DampingSpec spec{Vec3(60, 35, 35)};
  const double mass = 2.0, dt = 1e-5;
  const Mat hx = mass * Mat::Identity(3, 3);
  Vec x = kAttractor + Vec3(0.3, -0.2, 0.1), xd = Vec3(0.5, 0.5, -1.0);
  PassivityTrace trace;
  double s = storage(x, xd, hx, spec.lambdas[0], ds);
  for (int k = 0; k < 60000; ++k) {
    const Vec force = control_force(x, xd, ds, spec, Vec3::Zero());
    const Vec xd_next = xd + dt * force / mass;
    const Vec x_next = x + dt * 0.5 * (xd + xd_next);
    const double s_next = storage(x_next, xd_next, hx, spec.lambdas[0], ds);
    passivity_step(trace, (k + 1) * dt, s, s_next, dt, Vec3::Zero(), 0.5 * (xd + xd_next), true);
    x = x_next;
    xd = xd_next;
    s = s_next;
  }
  EXPECT_EQ(trace.violations, 0u);
  EXPECT_LT((x - kAttractor).norm(), 0.02);
}

}  // namespace
}  // namespace pcbf
