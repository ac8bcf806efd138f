#include "pcbf/barriers.hpp"

#include <cmath>

#include "pcbf/dynamics.hpp"

namespace pcbf {

BarrierGains BarrierGains::from_poles(double p1, double p2) {
  require(p1 < 0.0 && p2 < 0.0, "BarrierGains: poles must be negative");
  BarrierGains g{p1 * p2, -(p1 + p2)};
  g.validate();
  return g;
}

void BarrierGains::validate() const {
  require(k1 > 0.0 && k2 > 0.0, "BarrierGains: k1 and k2 must be positive");
  // Allow rounding at the critically damped point.
  require(k2 * k2 >= 4.0 * k1 * (1.0 - 1e-12), "BarrierGains: need k2^2 >= 4 k1 (real poles)");
}

std::string to_string(BarrierKind kind) {
  switch (kind) {
    case BarrierKind::JointUpper: return "JL+";
    case BarrierKind::JointLower: return "JL-";
    case BarrierKind::SelfCollision: return "SCA";
    case BarrierKind::ExternalCollision: return "ECA";
    case BarrierKind::Singularity: return "SA";
  }
  return "?";
}

std::vector<BarrierRow> joint_limit_rows(const Vec& q, const Vec& qdot, const RobotModel& model, double eps_lo,
                                         double eps_hi, const BarrierGains& gains) {
  const auto n = static_cast<Eigen::Index>(model.dof());
  require(q.size() == n && qdot.size() == n, "joint_limit_rows: state size mismatch");
  require(eps_lo >= 0.0 && eps_hi >= 0.0, "joint_limit_rows: margins must be nonnegative");
  std::vector<BarrierRow> rows;
  rows.reserve(2 * model.dof());
  for (Eigen::Index j = 0; j < n; ++j) {
    const Joint& joint = model.joints[static_cast<std::size_t>(j)];
    BarrierRow up;
    up.a = -Vec::Unit(n, j);
    up.h = joint.upper - q[j] - eps_hi;
    up.hdot = -qdot[j];
    up.b = -gains.k1 * up.h + gains.k2 * qdot[j];
    up.kind = BarrierKind::JointUpper;
    up.joint = static_cast<int>(j);
    rows.push_back(std::move(up));

    BarrierRow lo;
    lo.a = Vec::Unit(n, j);
    lo.h = q[j] - joint.lower - eps_lo;
    lo.hdot = qdot[j];
    lo.b = -gains.k1 * lo.h - gains.k2 * qdot[j];
    lo.kind = BarrierKind::JointLower;
    lo.joint = static_cast<int>(j);
    rows.push_back(std::move(lo));
  }
  return rows;
}

BarrierRow ecbf_row(double h, const Vec& grad_h, double hess_quad, const Vec& qdot, const BarrierGains& gains,
                    BarrierKind kind) {
  require(grad_h.size() == qdot.size(), "ecbf_row: gradient and velocity size mismatch");
  if (!grad_h.allFinite() || !std::isfinite(h) || !std::isfinite(hess_quad))
    throw NumericalError("ecbf_row: non-finite barrier value or derivative");
  BarrierRow row;
  row.a = grad_h;
  row.h = h;
  row.hdot = grad_h.dot(qdot);
  row.b = -gains.k1 * h - gains.k2 * row.hdot - hess_quad;
  row.kind = kind;
  row.hard = is_hard(kind);
  return row;
}

BarrierRow sca_row(const Vec& q, const Vec& qdot, const MlpModel& classifier, double eps_sca,
                   const BarrierGains& gains) {
  require(classifier.output_dim() == 2, "sca_row: classifier must have two outputs");
  const ScalarDerivatives d = mlp_value_grad_hess(classifier, q, Eigen::Vector2d(1.0, -1.0));
  return ecbf_row(d.value - eps_sca, d.gradient, qdot.dot(d.hessian * qdot), qdot, gains, BarrierKind::SelfCollision);
}

std::vector<BarrierRow> eca_rows(const Vec& q, const Vec& qdot, const MlpModel& jsdf,
                                 const std::vector<Obstacle>& obstacles, double eps_scf, const std::vector<int>& links,
                                 const BarrierGains& gains) {
  const Eigen::Index n = q.size();
  require(jsdf.input_dim() == n + 3, "eca_rows: distance model input must be (q, point)");
  for (int link : links)
    require(link >= 1 && link <= jsdf.output_dim(), "eca_rows: link index out of range");
  std::vector<BarrierRow> rows;
  Vec input(n + 3);
  input.head(n) = q;
  for (std::size_t o = 0; o < obstacles.size(); ++o) {
    input.tail(3) = obstacles[o].center;
    const auto per_link = mlp_output_derivatives(jsdf, input);
    for (int link : links) {
      const ScalarDerivatives& d = per_link[static_cast<std::size_t>(link - 1)];
      const Vec grad = d.gradient.head(n);
      const double quad = qdot.dot(d.hessian.topLeftCorner(n, n) * qdot);
      BarrierRow row = ecbf_row(d.value - eps_scf - obstacles[o].radius, grad, quad, qdot, gains,
                                BarrierKind::ExternalCollision);
      row.link = link;
      row.obstacle = static_cast<int>(o);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

BarrierRow sa_row(const Vec& q, const Vec& qdot, const RobotModel& model, double eps_sa, const BarrierGains& gains,
                  SaCache& cache, double dt) {
  require(dt > 0.0, "sa_row: dt must be positive");
  const double mi = manipulability_index(model, q);
  const Vec grad = manipulability_gradient(model, q);
  double quad = 0.0;
  if (cache.prev_grad && cache.prev_grad->size() == grad.size()) quad = ((grad - *cache.prev_grad) / dt).dot(qdot);
  cache.prev_grad = grad;
  return ecbf_row(mi - eps_sa, grad, quad, qdot, gains, BarrierKind::Singularity);
}

BarrierRow sa_row_exact(const Vec& q, const Vec& qdot, const RobotModel& model, double eps_sa,
                        const BarrierGains& gains, double fd_step) {
  const Eigen::Index n = q.size();
  Mat hess(n, n);
  Vec qp = q;
  Vec qm = q;
  for (Eigen::Index i = 0; i < n; ++i) {
    qp[i] = q[i] + fd_step;
    qm[i] = q[i] - fd_step;
    hess.col(i) = (manipulability_gradient(model, qp) - manipulability_gradient(model, qm)) / (2.0 * fd_step);
    qp[i] = q[i];
    qm[i] = q[i];
  }
  hess = 0.5 * (hess + hess.transpose());
  return ecbf_row(manipulability_index(model, q) - eps_sa, manipulability_gradient(model, q), qdot.dot(hess * qdot),
                  qdot, gains, BarrierKind::Singularity);
}

TorqueRows rows_to_torque_space(const std::vector<BarrierRow>& rows, const Mat& H, const Vec& bias, const Vec& tau_ext) {
  const Eigen::Index n = H.rows();
  require(H.cols() == n && bias.size() == n && tau_ext.size() == n, "rows_to_torque_space: size mismatch");
  TorqueRows out{Mat(static_cast<Eigen::Index>(rows.size()), n), Vec(static_cast<Eigen::Index>(rows.size()))};
  if (rows.empty()) return out;
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) throw NumericalError("rows_to_torque_space: mass matrix is not positive definite");
  Mat a(n, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k].a.size() == n, "rows_to_torque_space: row size mismatch");
    a.col(static_cast<Eigen::Index>(k)) = rows[k].a;
  }
  // H is symmetric, so (a^T H^-1)^T = H^-1 a.
  const Mat hinv_a = llt.solve(a);
  const Vec drift = tau_ext - bias;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out.a.row(i) = hinv_a.col(i).transpose();
    out.b[i] = rows[k].b - hinv_a.col(i).dot(drift);
  }
  return out;
}

}  // namespace pcbf
