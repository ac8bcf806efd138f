#include "pcbf/passive_control.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pcbf {

void DampingSpec::validate() const {
  require(lambdas.size() > 0, "DampingSpec: no eigenvalues");
  require((lambdas.array() >= 0.0).all(), "DampingSpec: eigenvalues must be nonnegative");
}

Mat damping_basis(const Vec& f, double tol) {
  const Eigen::Index d = f.size();
  const double norm = f.norm();
  if (!(norm > tol)) return Mat::Identity(d, d);

  Mat v(d, d);
  v.col(0) = f / norm;
  Eigen::Index skip = 0;
  f.cwiseAbs().maxCoeff(&skip);
  Eigen::Index col = 1;
  for (Eigen::Index k = 0; k < d && col < d; ++k) {
    if (k == skip) continue;
    Vec e = Vec::Unit(d, k);
    for (Eigen::Index j = 0; j < col; ++j) e -= v.col(j).dot(e) * v.col(j);
    // A second pass keeps V^T V = I at machine precision.
    for (Eigen::Index j = 0; j < col; ++j) e -= v.col(j).dot(e) * v.col(j);
    v.col(col++) = e.normalized();
  }
  return v;
}

Mat damping_matrix(const Mat& basis, const DampingSpec& spec) {
  require(basis.rows() == spec.lambdas.size() && basis.cols() == spec.lambdas.size(),
          "damping_matrix: dimension mismatch");
  Mat d = basis * spec.lambdas.asDiagonal() * basis.transpose();
  return 0.5 * (d + d.transpose());
}

Mat task_damping(const Vec& f, const DampingSpec& spec, double tol) {
  if (!(f.norm() > tol)) return spec.lambdas[0] * Mat::Identity(f.size(), f.size());
  return damping_matrix(damping_basis(f, tol), spec);
}

Vec control_force(const Vec& x, const Vec& xdot, const LinearDS& plan, const DampingSpec& spec, const Vec& gravity_task) {
  require(xdot.size() == x.size() && gravity_task.size() == x.size() && spec.lambdas.size() == x.size(),
          "control_force: dimension mismatch");
  const Vec f = eval_ds(plan, x);
  return gravity_task - task_damping(f, spec) * (xdot - f);
}

double storage(const Vec& x, const Vec& xdot, const Mat& task_inertia, double lambda1, const LinearDS& plan) {
  Eigen::LLT<Mat> llt(task_inertia);
  if (llt.info() != Eigen::Success) throw NumericalError("storage: task inertia is not positive definite");
  return 0.5 * xdot.dot(task_inertia * xdot) + lambda1 * potential(plan, x);
}

std::size_t PassivityTrace::feasible_steps() const {
  std::size_t k = 0;
  for (const auto& r : records) k += r.feasible ? 1 : 0;
  return k;
}

double PassivityTrace::satisfied_fraction() const {
  if (records.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& r : records)
    if (r.storage_rate - r.power <= relative_tolerance * std::max(1.0, std::abs(r.power))) ++ok;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double PassivityTrace::feasible_satisfied_fraction() const {
  const std::size_t feasible = feasible_steps();
  if (feasible == 0) return 1.0;
  return 1.0 - static_cast<double>(violations) / static_cast<double>(feasible);
}

void PassivityTrace::write_csv(std::ostream& out) const {
  out << "t,S,Sdot,power,feasible,violation\n";
  for (const auto& r : records)
    out << r.t << ',' << r.storage << ',' << r.storage_rate << ',' << r.power << ',' << (r.feasible ? 1 : 0) << ','
        << (r.violation ? 1 : 0) << '\n';
}

void passivity_step(PassivityTrace& trace, double t, double s_prev, double s_now, double dt, const Vec& f_ext,
                    const Vec& xdot, bool feasible) {
  require(dt > 0.0, "passivity_step: dt must be positive");
  PassivityRecord r;
  r.t = t;
  r.storage = s_now;
  r.storage_rate = (s_now - s_prev) / dt;
  r.power = f_ext.dot(xdot);
  r.feasible = feasible;
  const double tol = trace.relative_tolerance * std::max(1.0, std::abs(r.power));
  r.violation = feasible && (r.storage_rate - r.power > tol);
  if (r.violation) ++trace.violations;
  trace.records.push_back(r);
}

}  // namespace pcbf
