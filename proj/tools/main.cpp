#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "pcbf/scenario.hpp"

int main(int argc, char** argv) {
  using namespace pcbf::cli;
  CLI::App app{"Passive task-space control with barrier-function safety filters"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario file");
  run_cmd->add_option("scenario", run.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out_dir, "Output directory (default: runs/<scenario name>)");
  run_cmd->add_flag("--dump-qp", run.dump_qp, "Write every QP to qp_dump.txt");
  run_cmd->add_option("--disable", run.disable, "Disable constraint groups C1 (joint limits), C2 (self collision), "
                                                "C3 (external collision), C4 (singularity)")
      ->check(CLI::IsMember({"C1", "C2", "C3", "C4"}));
  run_cmd->add_option("--duration", run.duration, "Override the simulated duration [s]");

  TrainArgs sca;
  sca.samples = 200000;
  sca.hidden = {80, 50, 30, 10};
  sca.epochs = 200;
  sca.gate = 0.95;
  auto* sca_cmd = app.add_subcommand("train-sca", "Train the self-collision classifier");
  TrainArgs jsdf;
  jsdf.samples = 200000;
  jsdf.hidden = {128, 128, 64};
  jsdf.epochs = 200;
  jsdf.gate = 0.02;
  auto* jsdf_cmd = app.add_subcommand("train-jsdf", "Train the per-link distance regressor");
  for (auto [cmd, a] : {std::pair{sca_cmd, &sca}, std::pair{jsdf_cmd, &jsdf}}) {
    cmd->add_option("--robot", a->robot, "Robot JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", a->out, "Model file to write")->required();
    cmd->add_option("--samples", a->samples, "Dataset size")->capture_default_str();
    cmd->add_option("--hidden", a->hidden, "Hidden layer widths")->capture_default_str()->delimiter(',');
    cmd->add_option("--epochs", a->epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", a->batch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--optimizer", a->optimizer, "momentum or adam")
        ->capture_default_str()
        ->check(CLI::IsMember({"momentum", "adam"}));
    cmd->add_option("--lr", a->learning_rate, "Learning rate")->capture_default_str();
    cmd->add_option("--final-lr-fraction", a->final_lr_fraction, "Cosine decay target as a fraction of --lr")
        ->capture_default_str();
    cmd->add_option("--seed", a->seed, "Seed for sampling, initialization and shuffling")->capture_default_str();
    cmd->add_option("--dataset-out", a->dataset_out, "Also write the sampled dataset as CSV");
  }
  sca_cmd->add_option("--boundary-fraction", sca.boundary_fraction, "Share of samples bisected onto the boundary")
      ->capture_default_str();
  sca_cmd->add_option("--min-accuracy", sca.gate, "Held-out accuracy gate")->capture_default_str();
  jsdf_cmd->add_option("--max-rmse", jsdf.gate, "Held-out RMSE gate [m]")->capture_default_str();

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Run oracle and derivative checks");
  val_cmd->add_option("--robot", val.robot, "Robot JSON file (default: shipped franka_like)");
  val_cmd->add_option("--sca", val.sca, "Self-collision classifier to check");
  val_cmd->add_option("--jsdf", val.jsdf, "Distance regressor to check");
  val_cmd->add_option("--samples", val.samples, "Fresh samples for model agreement")->capture_default_str();
  val_cmd->add_option("--seed", val.seed, "Sampling seed")->capture_default_str();

  std::string data_dir = pcbf::default_data_dir().string();
  auto* list_cmd = app.add_subcommand("scenarios", "List the shipped scenario library");
  list_cmd->add_option("--data", data_dir, "Data directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run_command(run);
    if (*sca_cmd) return train_sca_command(sca);
    if (*jsdf_cmd) return train_jsdf_command(jsdf);
    if (*val_cmd) return validate_command(val);
    if (*list_cmd) return scenarios_command(data_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
