#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcbf::cli {

struct RunArgs {
  std::string scenario;
  std::string out_dir;
  bool dump_qp = false;
  std::vector<std::string> disable;
  double duration = 0.0;  // 0 keeps the scenario value
};

struct TrainArgs {
  std::string robot;
  std::string out;
  std::string dataset_out;
  std::size_t samples = 0;
  double boundary_fraction = 0.3;
  std::vector<int> hidden;
  int epochs = 0;
  int batch_size = 256;
  std::string optimizer = "momentum";
  double learning_rate = 1e-3;
  double final_lr_fraction = 1.0;
  std::uint64_t seed = 1;
  double gate = 0.0;
};

struct ValidateArgs {
  std::string robot;
  std::string sca;
  std::string jsdf;
  std::size_t samples = 2000;
  std::uint64_t seed = 12345;
};

int run_command(const RunArgs& args);
int train_sca_command(const TrainArgs& args);
int train_jsdf_command(const TrainArgs& args);
int scenarios_command(const std::string& data_dir);
int validate_command(const ValidateArgs& args);

}  // namespace pcbf::cli
