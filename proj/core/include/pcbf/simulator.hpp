#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "pcbf/scenario.hpp"

namespace pcbf {

/// One control/integration step. h values use NaN when the quantity is not
/// available (no model loaded).
struct StepRecord {
  double t = 0.0;
  Vec q, qdot;
  Vec x, xdot;
  Vec tau;        // applied joint torque, gravity compensation included
  Vec force;      // requested task force F_c
  Vec force_ext;  // external end-effector force
  double h_jl = std::numeric_limits<double>::quiet_NaN();   // min over joint-limit barriers
  double h_sca = std::numeric_limits<double>::quiet_NaN();  // Gamma - threshold
  double h_eca = std::numeric_limits<double>::quiet_NaN();  // min over link/obstacle barriers
  double h_sa = std::numeric_limits<double>::quiet_NaN();
  double manipulability = 0.0;
  double self_clearance = 0.0;  // capsule oracle [m]
  double obstacle_clearance = std::numeric_limits<double>::quiet_NaN();  // oracle, constrained links [m]
  double storage = 0.0;
  double storage_rate = 0.0;
  double power = 0.0;
  bool passive_feasible = false;
  bool passivity_violation = false;
  QPStatus qp_status = QPStatus::Optimal;
  int qp_iterations = 0;
  bool fallback = false;
  std::string active;     // active constraint kinds, e.g. "SCA;JL+3"
  double slack_max = 0.0;
  double soft_uncovered = 0.0;  // max soft-row shortfall not absorbed by its slack
  double tracking_residual = 0.0;  // |T tau_qp - F_c|
  double solve_seconds = 0.0;      // wall clock, kept out of the CSV
};

struct RunSummary {
  std::size_t steps = 0;
  double duration = 0.0;
  bool aborted = false;
  std::string abort_reason;
  double min_h_jl = std::numeric_limits<double>::infinity();
  double min_h_sca = std::numeric_limits<double>::infinity();
  double min_h_eca = std::numeric_limits<double>::infinity();
  double min_h_sa = std::numeric_limits<double>::infinity();
  double min_manipulability = std::numeric_limits<double>::infinity();
  double min_self_clearance = std::numeric_limits<double>::infinity();
  double min_obstacle_clearance = std::numeric_limits<double>::infinity();
  std::size_t hard_violations = 0;  // steps with h_jl or h_sca below -1e-6 (enabled constraints)
  std::size_t soft_violations = 0;  // steps with a soft h below zero
  double max_soft_uncovered = 0.0;
  std::size_t fallback_steps = 0;
  std::size_t infeasible_steps = 0;
  std::size_t max_iteration_steps = 0;
  std::size_t feasible_steps = 0;
  std::size_t passivity_violations = 0;
  double passivity_fraction = 1.0;      // over feasible steps
  double max_tracking_ratio = 0.0;      // |T tau - F_c| / (1 + |F_c|) over feasible steps
  double final_error = 0.0;             // |x - x*| at the end
  double min_error = std::numeric_limits<double>::infinity();
  double max_solve_seconds = 0.0;
  double mean_solve_seconds = 0.0;
};

struct RunLog {
  std::string scenario;
  Vec attractor;
  int dof = 0;
  int task_dim = 0;
  std::vector<StepRecord> rows;
  RunSummary summary;
};

/// Hard-violation threshold used by summaries and the CLI exit code.
inline constexpr double kHardTolerance = 1e-6;

/// Closed loop: passive task-space controller filtered by the relaxed barrier
/// QP, rigid-body dynamics, semi-implicit Euler.
class Simulator {
 public:
  /// The scenario must outlive the simulator. Throws on an invalid scenario.
  explicit Simulator(const Scenario& scenario);

  const JointState& state() const { return state_; }
  double time() const { return t_; }

  /// Advances one step. Throws NumericalError on a non-finite state.
  StepRecord step();

  /// Writes the QP of every subsequent step to `out` (text, see README).
  void set_qp_dump(std::ostream* out) { dump_ = out; }

 private:
  struct Context;
  Context evaluate(const JointState& s) const;

  const Scenario& sc_;
  JointState state_;
  double t_ = 0.0;
  long step_index_ = 0;
  SaCache sa_cache_;
  std::ostream* dump_ = nullptr;
};

/// Runs the scenario to completion. A numerical abort ends the run early with
/// the partial log and `summary.aborted` set.
RunLog run(const Scenario& scenario, std::ostream* qp_dump = nullptr);

RunSummary summarize(const RunLog& log, const Scenario& scenario);

/// True when the run has no hard violation and did not abort.
bool run_ok(const RunLog& log);

}  // namespace pcbf
