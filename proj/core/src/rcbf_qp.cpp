#include "pcbf/rcbf_qp.hpp"

namespace pcbf {

RcbfProblem assemble_rcbf_qp(const Vec& force, const Mat& task_map, const std::vector<BarrierRow>& barrier_rows,
                             const TorqueRows& torque_rows, const Vec& tau_lower, const Vec& tau_upper,
                             const RcbfWeights& weights) {
  const Eigen::Index n = task_map.cols();
  require(force.size() == task_map.rows(), "assemble_rcbf_qp: force and task map size mismatch");
  require(torque_rows.a.rows() == static_cast<Eigen::Index>(barrier_rows.size()) &&
              torque_rows.b.size() == torque_rows.a.rows() && (torque_rows.a.cols() == n || barrier_rows.empty()),
          "assemble_rcbf_qp: torque rows do not match barrier rows");
  require(tau_lower.size() == n && tau_upper.size() == n, "assemble_rcbf_qp: torque bound size mismatch");
  require((tau_lower.array() <= tau_upper.array()).all(), "assemble_rcbf_qp: torque lower bound above upper");
  require(weights.eca > 0.0 && weights.sa > 0.0 && weights.rho >= 0.0, "assemble_rcbf_qp: invalid weights");

  RcbfProblem out;
  out.torques = n;
  std::vector<double> slack_weight;
  for (const auto& row : barrier_rows) {
    if (row.hard) {
      out.slack_of_row.push_back(-1);
    } else {
      out.slack_of_row.push_back(static_cast<int>(slack_weight.size()));
      slack_weight.push_back(row.kind == BarrierKind::Singularity ? weights.sa : weights.eca);
    }
  }
  const auto s = static_cast<Eigen::Index>(slack_weight.size());
  const Eigen::Index m = n + s;
  const auto nb = static_cast<Eigen::Index>(barrier_rows.size());
  const Eigen::Index p = nb + 2 * n + s;

  DenseQP& qp = out.qp;
  qp.Q = Mat::Zero(m, m);
  qp.Q.topLeftCorner(n, n) = task_map.transpose() * task_map;
  qp.Q.topLeftCorner(n, n).diagonal().array() += weights.rho;
  for (Eigen::Index j = 0; j < s; ++j) qp.Q(n + j, n + j) = slack_weight[static_cast<std::size_t>(j)];
  qp.c = Vec::Zero(m);
  qp.c.head(n) = -task_map.transpose() * force;

  qp.A = Mat::Zero(p, m);
  qp.l = Vec::Zero(p);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < nb; ++i, ++r) {
    qp.A.block(r, 0, 1, n) = torque_rows.a.row(i);
    qp.l[r] = torque_rows.b[i];
    const int slack = out.slack_of_row[static_cast<std::size_t>(i)];
    if (slack >= 0) qp.A(r, n + slack) = 1.0;
    out.rows.push_back({RcbfRow::Source::Barrier, static_cast<int>(i)});
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    qp.A(r, j) = -1.0;
    qp.l[r++] = -tau_upper[j];
    out.rows.push_back({RcbfRow::Source::TorqueUpper, static_cast<int>(j)});
    qp.A(r, j) = 1.0;
    qp.l[r++] = tau_lower[j];
    out.rows.push_back({RcbfRow::Source::TorqueLower, static_cast<int>(j)});
  }
  for (Eigen::Index j = 0; j < s; ++j) {
    qp.A(r++, n + j) = 1.0;
    out.rows.push_back({RcbfRow::Source::SlackNonnegative, static_cast<int>(j)});
  }
  return out;
}

double tracking_residual(const Mat& task_map, const Vec& tau, const Vec& force) {
  return (task_map * tau - force).norm();
}

}  // namespace pcbf
