#include <benchmark/benchmark.h>

#include <random>

#include "pcbf/dynamics.hpp"
#include "pcbf/mlp.hpp"
#include "pcbf/qp.hpp"
#include "pcbf/robot_model.hpp"
#include "pcbf/scenario.hpp"
#include "pcbf/simulator.hpp"

namespace {

const pcbf::RobotModel& robot() {
  static const pcbf::RobotModel model = pcbf::load_robot_model(PCBF_DATA_DIR "/robots/franka_like.json");
  return model;
}

pcbf::Vec random_q(std::mt19937_64& rng) {
  const auto& m = robot();
  pcbf::Vec q(static_cast<Eigen::Index>(m.dof()));
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const auto& j = m.joints[static_cast<std::size_t>(i)];
    q[i] = std::uniform_real_distribution<double>(j.lower, j.upper)(rng);
  }
  return q;
}

void BM_MassMatrix(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const pcbf::Vec q = random_q(rng);
  for (auto _ : state) benchmark::DoNotOptimize(pcbf::mass_matrix(robot(), q));
}
BENCHMARK(BM_MassMatrix);

void BM_ForwardDynamics(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const pcbf::Vec q = random_q(rng);
  const pcbf::Vec qd = pcbf::Vec::Constant(q.size(), 0.3);
  const pcbf::Vec zero = pcbf::Vec::Zero(q.size());
  for (auto _ : state) benchmark::DoNotOptimize(pcbf::forward_dynamics(robot(), q, qd, zero, zero));
}
BENCHMARK(BM_ForwardDynamics);

void BM_ManipulabilityGradient(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const pcbf::Vec q = random_q(rng);
  for (auto _ : state) benchmark::DoNotOptimize(pcbf::manipulability_gradient(robot(), q));
}
BENCHMARK(BM_ManipulabilityGradient);

void BM_MlpHessian(benchmark::State& state) {
  const auto model = pcbf::MlpModel::random({7, 80, 50, 30, 10, 2}, 4);
  pcbf::Vec w(2);
  w << 1.0, -1.0;
  const pcbf::Vec x = pcbf::Vec::Constant(7, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(pcbf::mlp_value_grad_hess(model, x, w));
}
BENCHMARK(BM_MlpHessian);

void BM_QpSolve(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const pcbf::Mat b = pcbf::Mat::NullaryExpr(m, m, [&] { return g(rng); });
  pcbf::DenseQP qp;
  qp.Q = b * b.transpose() + pcbf::Mat::Identity(m, m);
  qp.c = pcbf::Vec::NullaryExpr(m, [&] { return g(rng); });
  qp.A = pcbf::Mat::NullaryExpr(2 * m, m, [&] { return g(rng); });
  qp.l = pcbf::Vec::NullaryExpr(2 * m, [&] { return g(rng) - 1.0; });
  for (auto _ : state) benchmark::DoNotOptimize(pcbf::solve_qp(qp));
}
BENCHMARK(BM_QpSolve)->Arg(9)->Arg(12);

void BM_SimulatorStep(benchmark::State& state) {
  const auto sc = pcbf::load_scenario(PCBF_DATA_DIR "/scenarios/s3_singularity.json");
  pcbf::Simulator sim(sc);
  for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_SimulatorStep);

}  // namespace

BENCHMARK_MAIN();
