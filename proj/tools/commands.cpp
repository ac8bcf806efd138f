#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "pcbf/collision_oracle.hpp"
#include "pcbf/dataset.hpp"
#include "pcbf/outputs.hpp"
#include "pcbf/scenario.hpp"
#include "pcbf/simulator.hpp"
#include "pcbf/training.hpp"

namespace pcbf::cli {

namespace {

std::string show(double v) {
  char buf[32];
  if (!std::isfinite(v)) return "n/a";
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

TrainingOptions options_from(const TrainArgs& a) {
  TrainingOptions o;
  o.hidden = a.hidden;
  o.epochs = a.epochs;
  o.batch_size = a.batch_size;
  o.optimizer = a.optimizer == "adam" ? Optimizer::Adam : Optimizer::Momentum;
  o.learning_rate = a.learning_rate;
  o.final_lr_fraction = a.final_lr_fraction;
  o.seed = a.seed;
  return o;
}

void stamp(MlpModel& model, const RobotModel& robot, const TrainArgs& a) {
  model.metadata["robot"] = robot.name;
  model.metadata["robot_fingerprint"] = geometry_fingerprint(robot);
  model.metadata["optimizer"] = a.optimizer;
  model.metadata["learning_rate"] = std::to_string(a.learning_rate);
}

}  // namespace

int run_command(const RunArgs& args) {
  Scenario sc = load_scenario(args.scenario);
  for (const auto& d : args.disable) sc.disable(parse_constraint_group(d));
  if (args.duration > 0.0) sc.duration = args.duration;
  const std::filesystem::path out = args.out_dir.empty() ? std::filesystem::path("runs") / sc.name : std::filesystem::path(args.out_dir);
  std::filesystem::create_directories(out);

  std::ofstream dump;
  if (args.dump_qp) {
    dump.open(out / "qp_dump.txt");
    if (!dump) throw std::runtime_error("cannot write " + (out / "qp_dump.txt").string());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const RunLog log = run(sc, args.dump_qp ? &dump : nullptr);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit_outputs(log, out);

  const RunSummary& s = log.summary;
  std::cout << "scenario        " << sc.name << " (" << s.steps << " steps, " << show(wall) << " s wall)\n"
            << "min h_JL        " << show(s.min_h_jl) << (sc.barriers.joint_limits ? "" : "  [disabled]") << '\n'
            << "min h_SCA       " << show(s.min_h_sca) << (sc.barriers.self_collision ? "" : "  [disabled]") << '\n'
            << "min h_ECA       " << show(s.min_h_eca) << (sc.barriers.external_collision ? "" : "  [disabled]") << '\n'
            << "min h_SA        " << show(s.min_h_sa) << (sc.barriers.singularity ? "" : "  [disabled]") << '\n'
            << "min MI          " << show(s.min_manipulability) << '\n'
            << "min self clear. " << show(s.min_self_clearance) << " m\n"
            << "min obst. clear " << show(s.min_obstacle_clearance) << " m\n"
            << "final |x - x*|  " << show(s.final_error) << " m (min " << show(s.min_error) << " m)\n"
            << "hard violations " << s.hard_violations << " steps\n"
            << "QP fallbacks    " << s.fallback_steps << " (infeasible " << s.infeasible_steps << ", max_iter "
            << s.max_iteration_steps << ")\n"
            << "passivity       " << s.passivity_violations << " violations in " << s.feasible_steps
            << " feasible steps\n"
            << "outputs         " << out.string() << '\n';
  if (s.aborted) std::cout << "ABORTED         " << s.abort_reason << '\n';
  return run_ok(log) ? 0 : 1;
}

int train_sca_command(const TrainArgs& a) {
  const RobotModel robot = load_robot_model(a.robot);
  std::cerr << "sampling " << a.samples << " configurations...\n";
  const ScaDataset data = sample_sca_dataset(robot, a.samples, a.boundary_fraction, a.seed);
  std::cerr << "  collided " << data.collided_count() << ", free " << data.free_count() << '\n';
  if (!a.dataset_out.empty()) save_sca_csv(data, a.dataset_out);
  TrainingOptions opt = options_from(a);
  opt.progress = [](int epoch, double loss, double acc) {
    std::cerr << "epoch " << epoch << "  loss " << loss << "  held-out accuracy " << acc << '\n';
  };
  TrainingReport report;
  MlpModel model = train_classifier(data, opt, &report, a.gate);
  stamp(model, robot, a);
  save_mlp(model, a.out);
  std::cout << "held-out accuracy " << report.holdout_accuracy << " (" << report.holdout_size << " samples), wrote "
            << a.out << '\n';
  return 0;
}

int train_jsdf_command(const TrainArgs& a) {
  const RobotModel robot = load_robot_model(a.robot);
  std::cerr << "sampling " << a.samples << " (configuration, point) pairs...\n";
  const JsdfDataset data = sample_jsdf_dataset(robot, a.samples, a.seed);
  if (!a.dataset_out.empty()) save_jsdf_csv(data, a.dataset_out);
  TrainingOptions opt = options_from(a);
  opt.progress = [](int epoch, double loss, double rmse) {
    std::cerr << "epoch " << epoch << "  loss " << loss << "  held-out RMSE " << rmse << " m\n";
  };
  TrainingReport report;
  MlpModel model = train_jsdf(data, opt, &report, a.gate);
  stamp(model, robot, a);
  save_mlp(model, a.out);
  std::cout << "held-out RMSE " << report.holdout_rmse << " m, max error " << report.holdout_max_error << " m, wrote "
            << a.out << '\n';
  return 0;
}

int scenarios_command(const std::string& data_dir) {
  const auto list = scenario_library(data_dir);
  if (list.empty()) {
    std::cerr << "no scenarios under " << data_dir << "/scenarios\n";
    return 1;
  }
  for (const auto& e : list) std::cout << e.name << "\t" << e.path.string() << "\n    " << e.description << '\n';
  return 0;
}

}  // namespace pcbf::cli
