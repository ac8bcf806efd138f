#include "pcbf/mlp.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace pcbf {

namespace {

constexpr const char* kMagic = "pcbf-mlp";
constexpr int kVersion = 1;

struct ForwardSweep {
  std::vector<Vec> t;    // tanh(z_l) for hidden layers
  std::vector<Mat> jz;   // dz_l / dx~ for hidden layers
  Vec output;
};

// Forward pass with the Jacobian of every hidden pre-activation w.r.t. the
// normalized input.
ForwardSweep sweep(const MlpModel& m, const Vec& x, bool with_jacobians) {
  ForwardSweep s;
  const std::size_t hidden = m.layers.size() - 1;
  s.t.reserve(hidden);
  if (with_jacobians) s.jz.reserve(hidden);
  Vec a = m.input_scale.cwiseProduct(x - m.input_offset);
  Mat ja;  // da/dx~
  for (std::size_t l = 0; l < hidden; ++l) {
    const DenseLayer& layer = m.layers[l];
    Vec z = layer.weights * a + layer.bias;
    if (with_jacobians) {
      Mat jz = l == 0 ? layer.weights : Mat(layer.weights * ja);
      const Vec t = z.array().tanh();
      ja = (1.0 - t.array().square()).matrix().asDiagonal() * jz;
      s.jz.push_back(std::move(jz));
      s.t.push_back(t);
      a = t;
    } else {
      a = z.array().tanh();
      s.t.push_back(a);
    }
  }
  s.output = m.layers.back().weights * a + m.layers.back().bias;
  return s;
}

ScalarDerivatives derivatives_from(const MlpModel& m, const ForwardSweep& s, const Vec& w) {
  const std::size_t hidden = m.layers.size() - 1;
  const Eigen::Index in = m.input_scale.size();
  ScalarDerivatives out;
  out.value = w.dot(s.output);
  Mat h = Mat::Zero(in, in);
  Vec adj = m.layers.back().weights.transpose() * w;  // d s / d a_l
  for (std::size_t l = hidden; l-- > 0;) {
    const Vec& t = s.t[l];
    const Vec dt = 1.0 - t.array().square();
    const Vec curvature = adj.array() * (-2.0 * t.array() * dt.array());
    h.noalias() += s.jz[l].transpose() * curvature.asDiagonal() * s.jz[l];
    const Vec adj_z = adj.cwiseProduct(dt);
    adj = m.layers[l].weights.transpose() * adj_z;
  }
  // adj is now d s / d x~.
  out.gradient = m.input_scale.cwiseProduct(adj);
  out.hessian = m.input_scale.asDiagonal() * h * m.input_scale.asDiagonal();
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose());
  return out;
}

void write_vec(std::ostream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << '\n';
}

Vec read_vec(std::istream& is, Eigen::Index n, const std::string& what) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(is >> v[i])) throw std::runtime_error("mlp file: truncated " + what);
  return v;
}

void expect(std::istream& is, const std::string& token) {
  std::string got;
  if (!(is >> got) || got != token) throw std::runtime_error("mlp file: expected '" + token + "', got '" + got + "'");
}

}  // namespace

std::vector<int> MlpModel::layer_sizes() const {
  std::vector<int> s{input_dim()};
  for (const auto& l : layers) s.push_back(static_cast<int>(l.weights.rows()));
  return s;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t k = 0;
  for (const auto& l : layers) k += l.weights.size() + l.bias.size();
  return k;
}

void MlpModel::validate() const {
  require(!layers.empty(), "mlp: no layers");
  Eigen::Index in = layers.front().weights.cols();
  require(input_offset.size() == in && input_scale.size() == in, "mlp: normalization size mismatch");
  for (const auto& l : layers) {
    require(l.weights.cols() == in, "mlp: inconsistent layer sizes");
    require(l.bias.size() == l.weights.rows(), "mlp: bias size mismatch");
    require(l.weights.allFinite() && l.bias.allFinite(), "mlp: non-finite parameters");
    in = l.weights.rows();
  }
  require(input_offset.allFinite() && input_scale.allFinite(), "mlp: non-finite normalization");
}

MlpModel MlpModel::random(const std::vector<int>& sizes, std::uint64_t seed) {
  require(sizes.size() >= 2, "mlp: need at least input and output sizes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MlpModel m;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    DenseLayer layer{Mat(out, in), Vec::Zero(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weights(r, c) = limit * u(rng);
    m.layers.push_back(std::move(layer));
  }
  m.input_offset = Vec::Zero(sizes.front());
  m.input_scale = Vec::Ones(sizes.front());
  return m;
}

Vec mlp_forward(const MlpModel& model, const Vec& x) {
  require(x.size() == model.input_dim(), "mlp_forward: input dimension mismatch");
  return sweep(model, x, false).output;
}

ScalarDerivatives mlp_value_grad_hess(const MlpModel& model, const Vec& x, const Vec& output_weights) {
  require(x.size() == model.input_dim(), "mlp_value_grad_hess: input dimension mismatch");
  require(output_weights.size() == model.output_dim(), "mlp_value_grad_hess: output weight size mismatch");
  return derivatives_from(model, sweep(model, x, true), output_weights);
}

std::vector<ScalarDerivatives> mlp_output_derivatives(const MlpModel& model, const Vec& x) {
  require(x.size() == model.input_dim(), "mlp_output_derivatives: input dimension mismatch");
  const ForwardSweep s = sweep(model, x, true);
  std::vector<ScalarDerivatives> out;
  out.reserve(model.output_dim());
  for (int k = 0; k < model.output_dim(); ++k) out.push_back(derivatives_from(model, s, Vec::Unit(model.output_dim(), k)));
  return out;
}

void save_mlp(const MlpModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write mlp file " + path.string());
  os << std::setprecision(17);
  os << kMagic << ' ' << kVersion << '\n';
  os << "sizes";
  for (int s : model.layer_sizes()) os << ' ' << s;
  os << '\n';
  os << "input_offset ";
  write_vec(os, model.input_offset);
  os << "input_scale ";
  write_vec(os, model.input_scale);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const DenseLayer& layer = model.layers[l];
    os << "layer " << l << ' ' << layer.weights.rows() << ' ' << layer.weights.cols() << '\n';
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) write_vec(os, layer.weights.row(r).transpose());
    os << "bias ";
    write_vec(os, layer.bias);
  }
  for (const auto& [k, v] : model.metadata) os << "meta " << k << ' ' << v << '\n';
  os << "end\n";
}

MlpModel load_mlp(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open mlp file " + path.string());
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != kMagic || version != kVersion)
    throw std::runtime_error("mlp file " + path.string() + ": not a pcbf-mlp v1 file");

  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  std::istringstream sizes_line(line);
  std::string tag;
  sizes_line >> tag;
  if (tag != "sizes") throw std::runtime_error("mlp file: missing sizes line");
  std::vector<int> sizes;
  for (int s; sizes_line >> s;) sizes.push_back(s);
  if (sizes.size() < 2) throw std::runtime_error("mlp file: need at least two sizes");

  MlpModel m;
  expect(is, "input_offset");
  m.input_offset = read_vec(is, sizes.front(), "input_offset");
  expect(is, "input_scale");
  m.input_scale = read_vec(is, sizes.front(), "input_scale");
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    expect(is, "layer");
    std::size_t index = 0;
    Eigen::Index rows = 0, cols = 0;
    is >> index >> rows >> cols;
    if (index != l || rows != sizes[l + 1] || cols != sizes[l]) throw std::runtime_error("mlp file: layer header mismatch");
    DenseLayer layer{Mat(rows, cols), Vec()};
    for (Eigen::Index r = 0; r < rows; ++r) layer.weights.row(r) = read_vec(is, cols, "weights").transpose();
    expect(is, "bias");
    layer.bias = read_vec(is, rows, "bias");
    m.layers.push_back(std::move(layer));
  }
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    ls >> tag;
    if (tag != "meta") throw std::runtime_error("mlp file: unexpected line '" + line + "'");
    std::string key;
    ls >> key;
    std::string value;
    std::getline(ls >> std::ws, value);
    m.metadata[key] = value;
  }
  m.validate();
  return m;
}

}  // namespace pcbf
