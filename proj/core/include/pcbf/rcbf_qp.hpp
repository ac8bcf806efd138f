#pragma once

#include <vector>

#include "pcbf/barriers.hpp"
#include "pcbf/qp.hpp"

namespace pcbf {

struct RcbfWeights {
  double eca = 1e3;  // Pi = eca * I
  double sa = 1e3;   // pi
  double rho = 1e-8;  // Tikhonov term on the torque block
};

/// Origin of each QP row.
struct RcbfRow {
  enum class Source { Barrier, TorqueUpper, TorqueLower, SlackNonnegative };
  Source source = Source::Barrier;
  int index = 0;  // barrier row, joint, or slack index
};

/// Decision vector z = [tau (n), slack (s)] where slack holds one entry per
/// soft row in barrier order.
struct RcbfProblem {
  DenseQP qp;
  Eigen::Index torques = 0;
  std::vector<int> slack_of_row;  // per barrier row: slack index or -1
  std::vector<RcbfRow> rows;
};

/// Builds
///   min |T tau - F_c|^2 + delta_ECA^T Pi delta_ECA + pi delta_SA^2 + rho |tau|^2
///   s.t. torque rows (soft rows relaxed by +delta), delta >= 0,
///        tau_lower <= tau <= tau_upper
/// in the 1/2 z^T Q z + c^T z form (all terms halved). `task_map` is the
/// d x n map T from joint torques to task forces.
RcbfProblem assemble_rcbf_qp(const Vec& force, const Mat& task_map, const std::vector<BarrierRow>& barrier_rows,
                             const TorqueRows& torque_rows, const Vec& tau_lower, const Vec& tau_upper,
                             const RcbfWeights& weights);

/// |T tau - F_c|: how far the applied torque is from the requested force.
double tracking_residual(const Mat& task_map, const Vec& tau, const Vec& force);

}  // namespace pcbf
