#include "pcbf/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "pcbf/collision_oracle.hpp"
#include "pcbf/training.hpp"

namespace pcbf {

struct Simulator::Context {
  LinkFrames frames;
  Vec x, xdot;
  Mat J;
  Mat H;
  Vec gravity;
  Vec bias;
  double manipulability = 0.0;
  double storage = 0.0;
};

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string row_label(const BarrierRow& row) {
  std::string s = to_string(row.kind);
  if (row.joint >= 0) s += std::to_string(row.joint + 1);
  if (row.link >= 0) s += "L" + std::to_string(row.link) + "O" + std::to_string(row.obstacle);
  return s;
}

void dump_matrix(std::ostream& os, const char* name, const Mat& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? " " : "") << m(r, c);
    os << '\n';
  }
}

void dump_vector(std::ostream& os, const char* name, const Vec& v) {
  os << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

}  // namespace

Simulator::Simulator(const Scenario& scenario) : sc_(scenario), state_(scenario.initial) { sc_.validate(); }

Simulator::Context Simulator::evaluate(const JointState& s) const {
  const RobotModel& model = *sc_.robot;
  Context c;
  c.frames = forward_kinematics(model, s.q);
  c.x = task_position(model, c.frames);
  c.J = jacobian(model, c.frames);
  c.xdot = c.J * s.qdot;
  c.H = mass_matrix(model, s.q);
  c.gravity = gravity_vector(model, s.q);
  c.bias = bias_forces(model, s.q, s.qdot);
  c.manipulability = manipulability_index(c.J);
  c.storage = storage(c.x, c.xdot, task_inertia(c.J, c.H), sc_.damping.lambdas[0], sc_.plan);
  return c;
}

StepRecord Simulator::step() {
  const RobotModel& model = *sc_.robot;
  const BarrierConfig& cfg = sc_.barriers;
  const auto n = static_cast<Eigen::Index>(model.dof());
  const Vec& q = state_.q;
  const Vec& qdot = state_.qdot;
  const Context c = evaluate(state_);

  StepRecord rec;
  rec.t = t_;
  rec.q = q;
  rec.qdot = qdot;
  rec.x = c.x;
  rec.xdot = c.xdot;
  rec.manipulability = c.manipulability;
  rec.storage = c.storage;
  rec.force_ext = sc_.force_at(t_);
  const Vec tau_ext = c.J.transpose() * rec.force_ext;
  rec.force = control_force(c.x, c.xdot, sc_.plan, sc_.damping, Vec::Zero(c.x.size()));

  // Barrier rows; diagnostics are computed even for disabled constraints.
  std::vector<BarrierRow> rows;
  const auto jl = joint_limit_rows(q, qdot, model, cfg.joint_margin, cfg.joint_margin, cfg.gains);
  rec.h_jl = INFINITY;
  for (const auto& r : jl) rec.h_jl = std::min(rec.h_jl, r.h);
  if (cfg.joint_limits) rows.insert(rows.end(), jl.begin(), jl.end());
  if (sc_.sca) {
    BarrierRow r = sca_row(q, qdot, *sc_.sca, cfg.sca_threshold, cfg.gains);
    rec.h_sca = r.h;
    if (cfg.self_collision) rows.push_back(std::move(r));
  }
  const std::vector<int> links = sc_.eca_links();
  if (sc_.jsdf && !sc_.obstacles.empty()) {
    auto eca = eca_rows(q, qdot, *sc_.jsdf, sc_.obstacles, cfg.eca_margin, links, cfg.gains);
    rec.h_eca = INFINITY;
    for (const auto& r : eca) rec.h_eca = std::min(rec.h_eca, r.h);
    if (cfg.external_collision) rows.insert(rows.end(), eca.begin(), eca.end());
  }
  rec.h_sa = c.manipulability - cfg.sa_threshold;
  if (cfg.singularity) rows.push_back(sa_row(q, qdot, model, cfg.sa_threshold, cfg.gains, sa_cache_, sc_.dt));

  rec.self_clearance = self_collision_oracle(model, q);
  if (!sc_.obstacles.empty()) {
    rec.obstacle_clearance = INFINITY;
    for (const auto& o : sc_.obstacles) {
      const Vec d = link_sdf_oracle(model, q, o.center);
      for (int link : links) rec.obstacle_clearance = std::min(rec.obstacle_clearance, d[link - 1] - o.radius);
    }
  }

  // The QP acts on tau_q; gravity is compensated in joint space.
  const TorqueRows trows = rows_to_torque_space(rows, c.H, c.bias - c.gravity, tau_ext);
  const Vec effort = model.effort_limits();
  const Vec tau_lo = -effort - c.gravity;
  const Vec tau_hi = effort - c.gravity;
  const double damping = adaptive_damping(c.manipulability, cfg.sa_threshold);
  const Mat task_map = damped_pinv_transpose(c.J, damping);
  const RcbfProblem problem = assemble_rcbf_qp(rec.force, task_map, rows, trows, tau_lo, tau_hi, sc_.weights);

  const auto t0 = std::chrono::steady_clock::now();
  const QPSolution sol = solve_qp(problem.qp, sc_.qp);
  rec.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.qp_status = sol.status;
  rec.qp_iterations = sol.iterations;

  Vec tau_q;
  Vec slack = Vec::Zero(problem.qp.variables() - n);
  if (sol.status == QPStatus::Optimal) {
    tau_q = sol.z.head(n);
    slack = sol.z.tail(slack.size()).cwiseMax(0.0);
    rec.tracking_residual = tracking_residual(task_map, tau_q, rec.force);
  } else {
    rec.fallback = true;
    tau_q = (-sc_.fallback_damping * qdot).cwiseMax(tau_lo).cwiseMin(tau_hi);
  }
  rec.slack_max = slack.size() ? slack.maxCoeff() : 0.0;
  rec.tau = tau_q + c.gravity;

  for (int i : sol.active_set) {
    const RcbfRow& r = problem.rows[static_cast<std::size_t>(i)];
    std::string label;
    switch (r.source) {
      case RcbfRow::Source::Barrier: label = row_label(rows[static_cast<std::size_t>(r.index)]); break;
      case RcbfRow::Source::TorqueUpper: label = "TAU+" + std::to_string(r.index + 1); break;
      case RcbfRow::Source::TorqueLower: label = "TAU-" + std::to_string(r.index + 1); break;
      case RcbfRow::Source::SlackNonnegative: label = "SLACK" + std::to_string(r.index + 1); break;
    }
    rec.active += (rec.active.empty() ? "" : ";") + label;
  }

  if (dump_) {
    std::ostream& os = *dump_;
    os << std::setprecision(17);
    os << "step " << step_index_ << " t " << t_ << '\n';
    os << "status " << to_string(sol.status) << " iterations " << sol.iterations << '\n';
    dump_matrix(os, "Q", problem.qp.Q);
    dump_vector(os, "c", problem.qp.c);
    dump_matrix(os, "A", problem.qp.A);
    dump_vector(os, "l", problem.qp.l);
    os << "rows " << problem.rows.size() << '\n';
    for (std::size_t i = 0; i < problem.rows.size(); ++i) {
      const RcbfRow& r = problem.rows[i];
      if (r.source == RcbfRow::Source::Barrier) os << row_label(rows[static_cast<std::size_t>(r.index)]);
      else if (r.source == RcbfRow::Source::TorqueUpper) os << "TAU+" << r.index + 1;
      else if (r.source == RcbfRow::Source::TorqueLower) os << "TAU-" << r.index + 1;
      else os << "SLACK" << r.index + 1;
      os << (i + 1 < problem.rows.size() ? " " : "");
    }
    os << '\n';
    dump_vector(os, "z", sol.z);
    dump_vector(os, "mu", sol.multipliers);
    os << "kkt " << sol.kkt.stationarity << ' ' << sol.kkt.primal << ' ' << sol.kkt.dual << ' '
       << sol.kkt.complementarity << '\n';
    os << "end\n";
  }

  const Vec qddot = forward_dynamics(model, q, qdot, rec.tau, tau_ext);
  if (!rec.fallback) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int s = problem.slack_of_row[i];
      if (s < 0) continue;
      const double shortfall = rows[i].b - rows[i].a.dot(qddot) - slack[s];
      rec.soft_uncovered = std::max(rec.soft_uncovered, shortfall);
    }
  }

  JointState next;
  next.qdot = qdot + qddot * sc_.dt;
  next.q = q + next.qdot * sc_.dt;
  if (!next.q.allFinite() || !next.qdot.allFinite())
    throw NumericalError("simulation: non-finite state at t = " + std::to_string(t_));
  const Context cn = evaluate(next);

  rec.passive_feasible = sol.status == QPStatus::Optimal && sol.active_set.empty();
  PassivityTrace trace;
  passivity_step(trace, t_, c.storage, cn.storage, sc_.dt, rec.force_ext, 0.5 * (c.xdot + cn.xdot),
                 rec.passive_feasible);
  rec.storage_rate = trace.records.back().storage_rate;
  rec.power = trace.records.back().power;
  rec.passivity_violation = trace.records.back().violation;

  state_ = std::move(next);
  ++step_index_;
  t_ = static_cast<double>(step_index_) * sc_.dt;
  return rec;
}

RunSummary summarize(const RunLog& log, const Scenario& scenario) {
  RunSummary s = log.summary;  // keeps abort information
  s.steps = log.rows.size();
  s.duration = scenario.duration;
  double solve_total = 0.0;
  for (const auto& r : log.rows) {
    s.min_h_jl = std::min(s.min_h_jl, r.h_jl);
    if (!std::isnan(r.h_sca)) s.min_h_sca = std::min(s.min_h_sca, r.h_sca);
    if (!std::isnan(r.h_eca)) s.min_h_eca = std::min(s.min_h_eca, r.h_eca);
    s.min_h_sa = std::min(s.min_h_sa, r.h_sa);
    s.min_manipulability = std::min(s.min_manipulability, r.manipulability);
    s.min_self_clearance = std::min(s.min_self_clearance, r.self_clearance);
    if (!std::isnan(r.obstacle_clearance)) s.min_obstacle_clearance = std::min(s.min_obstacle_clearance, r.obstacle_clearance);
    const bool hard = (scenario.barriers.joint_limits && r.h_jl < -kHardTolerance) ||
                      (scenario.barriers.self_collision && r.h_sca < -kHardTolerance);
    s.hard_violations += hard ? 1 : 0;
    const bool soft = (scenario.barriers.external_collision && r.h_eca < 0.0) ||
                      (scenario.barriers.singularity && r.h_sa < 0.0);
    s.soft_violations += soft ? 1 : 0;
    s.max_soft_uncovered = std::max(s.max_soft_uncovered, r.soft_uncovered);
    s.fallback_steps += r.fallback ? 1 : 0;
    s.infeasible_steps += r.qp_status == QPStatus::Infeasible ? 1 : 0;
    s.max_iteration_steps += r.qp_status == QPStatus::MaxIterations ? 1 : 0;
    if (r.passive_feasible) {
      ++s.feasible_steps;
      s.passivity_violations += r.passivity_violation ? 1 : 0;
      s.max_tracking_ratio = std::max(s.max_tracking_ratio, r.tracking_residual / (1.0 + r.force.norm()));
    }
    const double err = (r.x - scenario.plan.attractor).norm();
    s.min_error = std::min(s.min_error, err);
    s.final_error = err;
    s.max_solve_seconds = std::max(s.max_solve_seconds, r.solve_seconds);
    solve_total += r.solve_seconds;
  }
  s.passivity_fraction =
      s.feasible_steps ? 1.0 - static_cast<double>(s.passivity_violations) / static_cast<double>(s.feasible_steps) : 1.0;
  s.mean_solve_seconds = log.rows.empty() ? 0.0 : solve_total / static_cast<double>(log.rows.size());
  return s;
}

RunLog run(const Scenario& scenario, std::ostream* qp_dump) {
  RunLog log;
  log.scenario = scenario.name;
  log.attractor = scenario.plan.attractor;
  log.dof = static_cast<int>(scenario.robot->dof());
  log.task_dim = scenario.robot->task_dim;
  Simulator sim(scenario);
  sim.set_qp_dump(qp_dump);
  const auto steps = static_cast<long>(std::llround(scenario.duration / scenario.dt));
  log.rows.reserve(static_cast<std::size_t>(steps));
  try {
    for (long k = 0; k < steps; ++k) log.rows.push_back(sim.step());
  } catch (const NumericalError& e) {
    log.summary.aborted = true;
    log.summary.abort_reason = e.what();
  }
  log.summary = summarize(log, scenario);
  return log;
}

bool run_ok(const RunLog& log) { return !log.summary.aborted && log.summary.hard_violations == 0; }

}  // namespace pcbf
