#include "pcbf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace pcbf {

namespace {

enum class Loss { SoftmaxCrossEntropy, MeanSquared };

void fisher_yates(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

// Lexicographic order over (inputs, targets) columns.
std::vector<std::size_t> canonical_order(const Mat& inputs, const Mat& targets) {
  std::vector<std::size_t> order(static_cast<std::size_t>(inputs.cols()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index r = 0; r < inputs.rows(); ++r)
      if (inputs(r, a) != inputs(r, b)) return inputs(r, a) < inputs(r, b);
    for (Eigen::Index r = 0; r < targets.rows(); ++r)
      if (targets(r, a) != targets(r, b)) return targets(r, a) < targets(r, b);
    return a < b;
  });
  return order;
}

struct OptimizerState {
  std::vector<Mat> mw, vw;
  std::vector<Vec> mb, vb;
  long step = 0;
};

class Trainer {
 public:
  Trainer(MlpModel& model, Loss loss, const TrainingOptions& opt) : m_(model), loss_(loss), opt_(opt) {
    for (const auto& l : m_.layers) {
      st_.mw.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
      st_.vw.push_back(Mat::Zero(l.weights.rows(), l.weights.cols()));
      st_.mb.push_back(Vec::Zero(l.bias.size()));
      st_.vb.push_back(Vec::Zero(l.bias.size()));
    }
  }

  // One pass of minibatch updates over the given columns; returns mean loss.
  double epoch(const Mat& x, const Mat& y, const std::vector<std::size_t>& order, double lr) {
    const std::size_t n = order.size();
    const std::size_t bs = static_cast<std::size_t>(opt_.batch_size);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t b = std::min(bs, n - start);
      Mat xb(x.rows(), static_cast<Eigen::Index>(b));
      Mat yb(y.rows(), static_cast<Eigen::Index>(b));
      for (std::size_t k = 0; k < b; ++k) {
        xb.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(order[start + k]));
        yb.col(static_cast<Eigen::Index>(k)) = y.col(static_cast<Eigen::Index>(order[start + k]));
      }
      total += step(xb, yb, lr) * static_cast<double>(b);
    }
    return total / static_cast<double>(n);
  }

  Mat predict(const Mat& x) const {
    Mat a = x;
    for (std::size_t l = 0; l + 1 < m_.layers.size(); ++l)
      a = ((m_.layers[l].weights * a).colwise() + m_.layers[l].bias).array().tanh().matrix();
    return (m_.layers.back().weights * a).colwise() + m_.layers.back().bias;
  }

 private:
  double step(const Mat& xb, const Mat& yb, double lr) {
    const std::size_t layers = m_.layers.size();
    const double b = static_cast<double>(xb.cols());
    acts_.resize(layers);
    acts_[0] = xb;
    for (std::size_t l = 0; l + 1 < layers; ++l)
      acts_[l + 1] = ((m_.layers[l].weights * acts_[l]).colwise() + m_.layers[l].bias).array().tanh().matrix();
    Mat out = (m_.layers.back().weights * acts_[layers - 1]).colwise() + m_.layers.back().bias;

    double loss = 0.0;
    Mat grad_out;
    if (loss_ == Loss::SoftmaxCrossEntropy) {
      const Eigen::RowVectorXd mx = out.colwise().maxCoeff();
      Mat e = (out.rowwise() - mx).array().exp().matrix();
      const Eigen::RowVectorXd sum = e.colwise().sum();
      Mat p = e.array().rowwise() / sum.array();
      loss = -(yb.array() * (p.array().max(1e-300)).log()).sum() / b;
      grad_out = (p - yb) / b;
    } else {
      const Mat diff = out - yb;
      const double k = static_cast<double>(diff.size());
      loss = diff.squaredNorm() / k;
      grad_out = 2.0 * diff / k;
    }

    Mat delta = grad_out;
    for (std::size_t l = layers; l-- > 0;) {
      DenseLayer& layer = m_.layers[l];
      Mat gw = delta * acts_[l].transpose();
      Vec gb = delta.rowwise().sum();
      if (l > 0) {
        Mat back = layer.weights.transpose() * delta;
        delta = back.array() * (1.0 - acts_[l].array().square());
      }
      if (opt_.weight_decay > 0.0) gw += opt_.weight_decay * layer.weights;
      apply(l, layer, gw, gb, lr);
    }
    return loss;
  }

  void apply(std::size_t l, DenseLayer& layer, const Mat& gw, const Vec& gb, double lr) {
    if (opt_.optimizer == Optimizer::Momentum) {
      st_.mw[l] = opt_.momentum * st_.mw[l] - lr * gw;
      st_.mb[l] = opt_.momentum * st_.mb[l] - lr * gb;
      layer.weights += st_.mw[l];
      layer.bias += st_.mb[l];
      return;
    }
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (l == m_.layers.size() - 1) ++st_.step;  // output layer is updated first
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st_.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st_.step));
    st_.mw[l] = b1 * st_.mw[l] + (1.0 - b1) * gw;
    st_.vw[l] = b2 * st_.vw[l] + (1.0 - b2) * gw.cwiseProduct(gw);
    st_.mb[l] = b1 * st_.mb[l] + (1.0 - b1) * gb;
    st_.vb[l] = b2 * st_.vb[l] + (1.0 - b2) * gb.cwiseProduct(gb);
    layer.weights.array() -= lr * (st_.mw[l].array() / c1) / ((st_.vw[l].array() / c2).sqrt() + eps);
    layer.bias.array() -= lr * (st_.mb[l].array() / c1) / ((st_.vb[l].array() / c2).sqrt() + eps);
  }

  MlpModel& m_;
  Loss loss_;
  const TrainingOptions& opt_;
  OptimizerState st_;
  std::vector<Mat> acts_;
};

double scheduled_lr(const TrainingOptions& opt, int epoch) {
  if (opt.final_lr_fraction >= 1.0 || opt.epochs <= 1) return opt.learning_rate;
  const double progress = static_cast<double>(epoch) / static_cast<double>(opt.epochs - 1);
  const double f = opt.final_lr_fraction + 0.5 * (1.0 - opt.final_lr_fraction) * (1.0 + std::cos(M_PI * progress));
  return opt.learning_rate * f;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> holdout;
};

Split split(const Mat& inputs, const Mat& targets, const TrainingOptions& opt, std::mt19937_64& rng) {
  std::vector<std::size_t> order = canonical_order(inputs, targets);
  fisher_yates(order, rng);
  const auto h = static_cast<std::size_t>(std::llround(opt.holdout_fraction * static_cast<double>(order.size())));
  Split s;
  s.holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(h), order.end());
  return s;
}

Mat gather(const Mat& m, const std::vector<std::size_t>& idx) {
  Mat out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

void set_joint_normalization(MlpModel& m, const Vec& lower, const Vec& upper) {
  const Eigen::Index n = lower.size();
  m.input_offset.head(n) = 0.5 * (lower + upper);
  m.input_scale.head(n) = (2.0 / (upper - lower).array()).matrix();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void check_options(const TrainingOptions& opt) {
  require(opt.epochs > 0 && opt.batch_size > 0, "training: epochs and batch_size must be positive");
  require(opt.learning_rate > 0.0, "training: learning_rate must be positive");
  require(opt.holdout_fraction > 0.0 && opt.holdout_fraction < 1.0, "training: holdout_fraction in (0,1)");
}

}  // namespace

MlpModel train_classifier(const ScaDataset& data, const TrainingOptions& opt, TrainingReport* report,
                          double min_accuracy) {
  check_options(opt);
  const std::size_t collided = data.collided_count();
  require(collided > 0 && collided < data.samples.size(), "train_classifier: dataset needs both classes");
  const Eigen::Index n = data.lower.size();
  const auto count = static_cast<Eigen::Index>(data.samples.size());

  Mat raw(n, count);
  Mat targets = Mat::Zero(2, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    raw.col(k) = data.samples[static_cast<std::size_t>(k)].q;
    targets(data.samples[static_cast<std::size_t>(k)].collided ? 1 : 0, k) = 1.0;
  }

  std::vector<int> sizes{static_cast<int>(n)};
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(2);
  MlpModel model = MlpModel::random(sizes, opt.seed);
  set_joint_normalization(model, data.lower, data.upper);
  const Mat x = model.input_scale.asDiagonal() * (raw.colwise() - model.input_offset);

  std::mt19937_64 rng(opt.seed ^ 0x9E3779B97F4A7C15ull);
  const Split s = split(raw, targets, opt, rng);
  const Mat xh = gather(x, s.holdout);
  const Mat yh = gather(targets, s.holdout);

  auto accuracy = [&](const Trainer& t) {
    const Mat out = t.predict(xh);
    std::size_t ok = 0;
    for (Eigen::Index k = 0; k < out.cols(); ++k) ok += ((out(0, k) - out(1, k) > 0.0) == (yh(0, k) > 0.5)) ? 1 : 0;
    return static_cast<double>(ok) / static_cast<double>(std::max<Eigen::Index>(1, out.cols()));
  };

  Trainer trainer(model, Loss::SoftmaxCrossEntropy, opt);
  std::vector<std::size_t> order = s.train;
  double loss = 0.0;
  for (int e = 0; e < opt.epochs; ++e) {
    fisher_yates(order, rng);
    loss = trainer.epoch(x, targets, order, scheduled_lr(opt, e));
    if (!std::isfinite(loss)) throw TrainingError("train_classifier: loss diverged", {});
    if (opt.progress && ((e + 1) % opt.progress_every == 0 || e + 1 == opt.epochs)) opt.progress(e + 1, loss, accuracy(trainer));
  }

  TrainingReport r;
  r.train_size = s.train.size();
  r.holdout_size = s.holdout.size();
  r.final_loss = loss;
  r.holdout_accuracy = accuracy(trainer);
  if (report) *report = r;
  model.metadata["kind"] = "sca-classifier";
  model.metadata["holdout_accuracy"] = fmt(r.holdout_accuracy);
  model.metadata["samples"] = std::to_string(data.samples.size());
  model.metadata["epochs"] = std::to_string(opt.epochs);
  model.metadata["seed"] = std::to_string(opt.seed);
  if (r.holdout_accuracy < min_accuracy) {
    std::ostringstream os;
    os << "train_classifier: held-out accuracy " << r.holdout_accuracy << " below " << min_accuracy << " (train "
       << r.train_size << ", held-out " << r.holdout_size << ", collided fraction "
       << static_cast<double>(collided) / static_cast<double>(data.samples.size()) << ", final loss " << loss << ")";
    throw TrainingError(os.str(), r);
  }
  return model;
}

MlpModel train_jsdf(const JsdfDataset& data, const TrainingOptions& opt, TrainingReport* report, double max_rmse) {
  check_options(opt);
  require(!data.samples.empty(), "train_jsdf: empty dataset");
  const Eigen::Index n = data.lower.size();
  const Eigen::Index links = data.samples.front().distances.size();
  const auto count = static_cast<Eigen::Index>(data.samples.size());

  Mat raw(n + 3, count);
  Mat targets(links, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const JsdfSample& s = data.samples[static_cast<std::size_t>(k)];
    raw.col(k) << s.q, s.point;
    targets.col(k) = s.distances;
  }

  std::vector<int> sizes{static_cast<int>(n + 3)};
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(static_cast<int>(links));
  MlpModel model = MlpModel::random(sizes, opt.seed);
  set_joint_normalization(model, data.lower, data.upper);
  model.input_offset.tail(3) = 0.5 * (data.region.box_lower + data.region.box_upper);
  model.input_scale.tail(3) = (2.0 / (data.region.box_upper - data.region.box_lower).array()).matrix();
  const Mat x = model.input_scale.asDiagonal() * (raw.colwise() - model.input_offset);

  std::mt19937_64 rng(opt.seed ^ 0x9E3779B97F4A7C15ull);
  const Split s = split(raw, targets, opt, rng);
  const Mat xh = gather(x, s.holdout);
  const Mat yh = gather(targets, s.holdout);

  auto errors = [&](const Trainer& t) {
    const Mat diff = t.predict(xh) - yh;
    return std::pair{std::sqrt(diff.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, diff.size()))),
                     diff.cwiseAbs().maxCoeff()};
  };

  Trainer trainer(model, Loss::MeanSquared, opt);
  std::vector<std::size_t> order = s.train;
  double loss = 0.0;
  for (int e = 0; e < opt.epochs; ++e) {
    fisher_yates(order, rng);
    loss = trainer.epoch(x, targets, order, scheduled_lr(opt, e));
    if (!std::isfinite(loss)) throw TrainingError("train_jsdf: loss diverged", {});
    if (opt.progress && ((e + 1) % opt.progress_every == 0 || e + 1 == opt.epochs)) opt.progress(e + 1, loss, errors(trainer).first);
  }

  TrainingReport r;
  r.train_size = s.train.size();
  r.holdout_size = s.holdout.size();
  r.final_loss = loss;
  std::tie(r.holdout_rmse, r.holdout_max_error) = errors(trainer);
  if (report) *report = r;
  model.metadata["kind"] = "jsdf-regressor";
  model.metadata["holdout_rmse"] = fmt(r.holdout_rmse);
  model.metadata["samples"] = std::to_string(data.samples.size());
  model.metadata["epochs"] = std::to_string(opt.epochs);
  model.metadata["seed"] = std::to_string(opt.seed);
  if (r.holdout_rmse > max_rmse) {
    std::ostringstream os;
    os << "train_jsdf: held-out RMSE " << r.holdout_rmse << " m above " << max_rmse << " m (max abs error "
       << r.holdout_max_error << ", train " << r.train_size << ", final loss " << loss << ")";
    throw TrainingError(os.str(), r);
  }
  return model;
}

ScalarDerivatives sca_boundary(const MlpModel& classifier, const Vec& q) {
  require(classifier.output_dim() == 2, "sca_boundary: classifier must have two outputs");
  return mlp_value_grad_hess(classifier, q, Eigen::Vector2d(1.0, -1.0));
}

}  // namespace pcbf
