#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>

#include "commands.hpp"
#include "pcbf/collision_oracle.hpp"
#include "pcbf/dataset.hpp"
#include "pcbf/dynamics.hpp"
#include "pcbf/scenario.hpp"
#include "pcbf/training.hpp"

namespace pcbf::cli {

namespace {

class Report {
 public:
  void check(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
    failures_ += ok ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Vec random_q(const RobotModel& m, std::mt19937_64& rng, double shrink = 0.9) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const Vec lo = m.lower_limits(), hi = m.upper_limits();
  return 0.5 * (lo + hi) + shrink * (hi - lo).cwiseProduct(Vec::NullaryExpr(lo.size(), [&] { return u(rng); }));
}


}  // namespace

int validate_command(const ValidateArgs& args) {
  const std::filesystem::path robot_path =
      args.robot.empty() ? default_data_dir() / "robots" / "franka_like.json" : std::filesystem::path(args.robot);
  const RobotModel robot = load_robot_model(robot_path);
  std::mt19937_64 rng(args.seed);
  Report report;
  const auto n = static_cast<Eigen::Index>(robot.dof());

  // Jacobian against central differences of the task position.
  double jac_err = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vec q = random_q(robot, rng);
    const Mat J = jacobian(robot, q);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec qp = q, qm = q;
      qp[i] += 1e-6;
      qm[i] -= 1e-6;
      const Vec col = (task_position(robot, qp) - task_position(robot, qm)).head(3) / 2e-6;
      jac_err = std::max(jac_err, (col - J.col(i).head(3)).norm());
    }
  }
  report.check("jacobian vs finite differences", jac_err < 1e-7, "max error " + sci(jac_err));

  // Mass matrix symmetry/definiteness and RNEA consistency.
  double sym_err = 0.0, rnea_err = 0.0, min_eig = INFINITY;
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    const Vec q = random_q(robot, rng);
    const Vec qd = Vec::NullaryExpr(n, [&] { return g(rng); });
    const Vec qdd = Vec::NullaryExpr(n, [&] { return g(rng); });
    const Mat H = mass_matrix(robot, q);
    sym_err = std::max(sym_err, (H - H.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat>(H).eigenvalues().minCoeff());
    const Vec lhs = inverse_dynamics(robot, q, qd, qdd);
    rnea_err = std::max(rnea_err, (lhs - H * qdd - bias_forces(robot, q, qd)).norm() / (1.0 + lhs.norm()));
  }
  report.check("mass matrix symmetric positive definite", sym_err < 1e-12 && min_eig > 0.0,
               "asymmetry " + sci(sym_err) + ", min eigenvalue " + sci(min_eig));
  report.check("RNEA equals H qdd + bias", rnea_err < 1e-10, "max relative error " + sci(rnea_err));

  // Manipulability gradient against differences of MI.
  double mi_err = 0.0;
  int mi_checked = 0;
  for (int k = 0; k < 50 && mi_checked < 20; ++k) {
    const Vec q = random_q(robot, rng);
    if (manipulability_index(robot, q) < 0.02) continue;
    const Vec grad = manipulability_gradient(robot, q);
    Vec fd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec qp = q, qm = q;
      qp[i] += 1e-6;
      qm[i] -= 1e-6;
      fd[i] = (manipulability_index(robot, qp) - manipulability_index(robot, qm)) / 2e-6;
    }
    mi_err = std::max(mi_err, (grad - fd).norm() / std::max(1e-3, fd.norm()));
    ++mi_checked;
  }
  report.check("manipulability gradient vs finite differences", mi_err < 1e-4, "max relative error " + sci(mi_err));

  if (!args.sca.empty()) {
    const MlpModel sca = load_mlp(args.sca);
    double grad_err = 0.0, hess_err = 0.0;
    for (int k = 0; k < 20; ++k) {
      const Vec q = random_q(robot, rng);
      const ScalarDerivatives d = sca_boundary(sca, q);
      Vec fd(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        Vec qp = q, qm = q;
        qp[i] += 1e-5;
        qm[i] -= 1e-5;
        const ScalarDerivatives dp = sca_boundary(sca, qp), dm = sca_boundary(sca, qm);
        fd[i] = (dp.value - dm.value) / 2e-5;
        hess_err = std::max(hess_err, ((dp.gradient - dm.gradient) / 2e-5 - d.hessian.col(i)).norm() /
                                          std::max(1.0, d.hessian.col(i).norm()));
      }
      grad_err = std::max(grad_err, (fd - d.gradient).norm() / std::max(1.0, d.gradient.norm()));
    }
    report.check("classifier gradient vs finite differences", grad_err < 1e-6, "max error " + sci(grad_err));
    report.check("classifier Hessian vs finite differences", hess_err < 1e-4, "max error " + sci(hess_err));

    std::size_t agree = 0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec lo = robot.lower_limits(), hi = robot.upper_limits();
    for (std::size_t k = 0; k < args.samples; ++k) {
      const Vec q = lo + (hi - lo).cwiseProduct(Vec::NullaryExpr(n, [&] { return u(rng); }));
      const bool free_model = sca_boundary(sca, q).value > 0.0;
      const bool free_oracle = self_collision_oracle(robot, q) >= 0.0;
      agree += free_model == free_oracle ? 1 : 0;
    }
    const double acc = static_cast<double>(agree) / static_cast<double>(args.samples);
    report.check("classifier sign agreement with capsule oracle", acc >= 0.98,
                 std::to_string(acc) + " on " + std::to_string(args.samples) + " fresh samples");
  }

  if (!args.jsdf.empty()) {
    const MlpModel jsdf = load_mlp(args.jsdf);
    const JsdfDataset data = sample_jsdf_dataset(robot, args.samples, args.seed ^ 0xA5A5A5A5ull);
    double se = 0.0;
    std::size_t count = 0;
    for (const auto& s : data.samples) {
      Vec in(n + 3);
      in << s.q, s.point;
      se += (mlp_forward(jsdf, in) - s.distances).squaredNorm();
      count += static_cast<std::size_t>(s.distances.size());
    }
    const double rmse = std::sqrt(se / static_cast<double>(count));
    report.check("distance regressor RMSE on fresh samples", rmse <= 0.02, sci(rmse) + " m");
  }

  std::cout << (report.failures() ? "validation FAILED (" + std::to_string(report.failures()) + " checks)\n"
                                  : std::string("validation passed\n"));
  return report.failures() ? 1 : 0;
}

}  // namespace pcbf::cli
