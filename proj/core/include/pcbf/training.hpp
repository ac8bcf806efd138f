#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcbf/dataset.hpp"
#include "pcbf/mlp.hpp"

namespace pcbf {

enum class Optimizer { Momentum, Adam };

struct TrainingOptions {
  std::vector<int> hidden;  // hidden layer widths
  int epochs = 200;
  int batch_size = 256;
  Optimizer optimizer = Optimizer::Momentum;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double final_lr_fraction = 1.0;  // cosine decay target; 1 keeps the rate constant
  double weight_decay = 0.0;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 1;
  // Per-epoch progress: (epoch, mean training loss, held-out metric).
  std::function<void(int, double, double)> progress;
  int progress_every = 10;
};

struct TrainingReport {
  std::size_t train_size = 0;
  std::size_t holdout_size = 0;
  double final_loss = 0.0;
  double holdout_accuracy = 0.0;  // classifier
  double holdout_rmse = 0.0;      // regressor [m]
  double holdout_max_error = 0.0; // regressor [m]
};

/// Raised when a trained model misses its quality gate.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, TrainingReport report) : std::runtime_error(what), report(report) {}
  TrainingReport report;
};

/// Two-output self-collision classifier trained with softmax cross-entropy
/// (free -> [1, 0], collided -> [0, 1]); Gamma(q) = y_0 - y_1 is positive in
/// free space. Records are put in canonical order before the seeded shuffle,
/// so the result does not depend on dataset order. Throws TrainingError when
/// held-out accuracy is below `min_accuracy`.
MlpModel train_classifier(const ScaDataset& data, const TrainingOptions& options, TrainingReport* report = nullptr,
                          double min_accuracy = 0.95);

/// Regressor (q, x0) -> per-link distances, mean-squared-error loss. Throws
/// TrainingError when held-out RMSE exceeds `max_rmse`.
MlpModel train_jsdf(const JsdfDataset& data, const TrainingOptions& options, TrainingReport* report = nullptr,
                    double max_rmse = 0.02);

/// Scalar self-collision boundary Gamma(q) = y_0 - y_1 with derivatives.
ScalarDerivatives sca_boundary(const MlpModel& classifier, const Vec& q);

}  // namespace pcbf
