#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcbf/types.hpp"

namespace pcbf {

struct DenseLayer {
  Mat weights;  // out x in
  Vec bias;
};

/// Feed-forward network: tanh on hidden layers, identity on the output layer.
/// Inputs are first mapped through x~ = input_scale .* (x - input_offset).
struct MlpModel {
  std::vector<DenseLayer> layers;
  Vec input_offset;
  Vec input_scale;
  std::map<std::string, std::string> metadata;

  int input_dim() const { return static_cast<int>(layers.front().weights.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weights.rows()); }
  std::vector<int> layer_sizes() const;
  std::size_t parameter_count() const;
  void validate() const;

  /// Glorot-uniform weights, zero biases, identity normalization.
  static MlpModel random(const std::vector<int>& sizes, std::uint64_t seed);
};

Vec mlp_forward(const MlpModel& model, const Vec& x);

struct ScalarDerivatives {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

/// Value, gradient and Hessian of s(x) = w^T y(x). Gradient by reverse
/// accumulation; the Hessian sums J_l^T diag(adj_l .* tanh''(z_l)) J_l over
/// hidden layers, where J_l = dz_l/dx comes from a forward Jacobian sweep.
ScalarDerivatives mlp_value_grad_hess(const MlpModel& model, const Vec& x, const Vec& output_weights);

/// The same for every output at once (shares the forward sweep).
std::vector<ScalarDerivatives> mlp_output_derivatives(const MlpModel& model, const Vec& x);

/// Plain text model file, see README ("Model files").
void save_mlp(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_mlp(const std::filesystem::path& path);

}  // namespace pcbf
