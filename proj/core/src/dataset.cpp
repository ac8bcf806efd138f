#include "pcbf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "pcbf/collision_oracle.hpp"

namespace pcbf {

namespace {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(rng_); }
  double unit() { return unit_(rng_); }
  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(unit() * static_cast<double>(n))); }
  Vec uniform_q(const Vec& lo, const Vec& hi) {
    Vec q(lo.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = uniform(lo[i], hi[i]);
    return q;
  }
  Vec3 unit_vector() {
    // Marsaglia: rejection sample in the cube, project to the sphere.
    for (;;) {
      Vec3 v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
      const double n = v.norm();
      if (n > 1e-3 && n <= 1.0) return v / n;
    }
  }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace

std::size_t ScaDataset::collided_count() const {
  std::size_t k = 0;
  for (const auto& s : samples) k += s.collided ? 1 : 0;
  return k;
}

ScaDataset sample_sca_dataset(const RobotModel& model, std::size_t n_total, double boundary_fraction,
                              std::uint64_t seed, double boundary_tolerance) {
  require(n_total > 0, "sample_sca_dataset: n_total must be positive");
  require(boundary_fraction >= 0.0 && boundary_fraction <= 1.0, "sample_sca_dataset: boundary_fraction in [0,1]");
  Sampler rng(seed);
  ScaDataset data;
  data.lower = model.lower_limits();
  data.upper = model.upper_limits();
  const auto n_boundary = static_cast<std::size_t>(std::llround(boundary_fraction * static_cast<double>(n_total)));
  const std::size_t n_uniform = n_total - n_boundary;
  data.samples.reserve(n_total);

  for (std::size_t k = 0; k < n_uniform; ++k) {
    Vec q = rng.uniform_q(data.lower, data.upper);
    const double c = self_collision_oracle(model, q);
    data.samples.push_back({std::move(q), c < 0.0, c});
  }

  const Vec range = data.upper - data.lower;
  std::size_t found = 0;
  while (found < n_boundary) {
    const Vec qa = rng.uniform_q(data.lower, data.upper);
    Vec qb(qa.size());
    const double step = rng.uniform(0.1, 0.6);
    for (Eigen::Index i = 0; i < qa.size(); ++i)
      qb[i] = std::clamp(qa[i] + step * range[i] * rng.uniform(-0.5, 0.5), data.lower[i], data.upper[i]);
    double ca = self_collision_oracle(model, qa);
    const double cb = self_collision_oracle(model, qb);
    if ((ca < 0.0) == (cb < 0.0)) continue;
    Vec lo = qa;
    Vec hi = qb;
    Vec mid = 0.5 * (lo + hi);
    double cm = self_collision_oracle(model, mid);
    for (int it = 0; it < 60 && std::abs(cm) >= boundary_tolerance; ++it) {
      if ((cm < 0.0) == (ca < 0.0)) {
        lo = mid;
        ca = cm;
      } else {
        hi = mid;
      }
      mid = 0.5 * (lo + hi);
      cm = self_collision_oracle(model, mid);
    }
    if (std::abs(cm) >= boundary_tolerance) continue;
    data.samples.push_back({std::move(mid), cm < 0.0, cm});
    ++found;
  }
  return data;
}

JsdfDataset sample_jsdf_dataset(const RobotModel& model, std::size_t n_total, std::uint64_t seed,
                                const JsdfSampling& region) {
  require(n_total > 0, "sample_jsdf_dataset: n_total must be positive");
  Sampler rng(seed);
  JsdfDataset data;
  data.lower = model.lower_limits();
  data.upper = model.upper_limits();
  data.region = region;
  data.samples.reserve(n_total);
  const Vec3 shell_center(0.0, 0.0, 0.5);
  for (std::size_t k = 0; k < n_total; ++k) {
    JsdfSample s;
    s.q = rng.uniform_q(data.lower, data.upper);
    const double mode = rng.unit();
    if (mode < region.near_fraction) {
      const auto caps = world_capsules(model, forward_kinematics(model, s.q));
      std::vector<const WorldCapsule*> moving;
      for (const auto& c : caps)
        if (c.link > 0) moving.push_back(&c);
      const WorldCapsule& c = *moving[rng.index(moving.size())];
      const Vec3 axis_point = c.a + rng.unit() * (c.b - c.a);
      s.point = axis_point + (c.radius + rng.uniform(-c.radius, region.near_band)) * rng.unit_vector();
    } else if (mode < region.near_fraction + region.far_fraction) {
      s.point = shell_center + rng.uniform(region.far_radius_min, region.far_radius_max) * rng.unit_vector();
    } else {
      for (int i = 0; i < 3; ++i) s.point[i] = rng.uniform(region.box_lower[i], region.box_upper[i]);
    }
    s.distances = link_sdf_oracle(model, s.q, s.point);
    data.samples.push_back(std::move(s));
  }
  return data;
}

void save_sca_csv(const ScaDataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  const Eigen::Index n = data.lower.size();
  for (Eigen::Index i = 0; i < n; ++i) os << 'q' << i + 1 << ',';
  os << "collided,clearance\n";
  for (const auto& s : data.samples) {
    for (Eigen::Index i = 0; i < n; ++i) os << s.q[i] << ',';
    os << (s.collided ? 1 : 0) << ',' << s.clearance << '\n';
  }
}

ScaDataset load_sca_csv(const std::filesystem::path& path, const Vec& lower, const Vec& upper) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  ScaDataset data;
  data.lower = lower;
  data.upper = upper;
  std::string line;
  std::getline(is, line);
  const Eigen::Index n = lower.size();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ScaSample s;
    s.q.resize(n);
    char comma = 0;
    for (Eigen::Index i = 0; i < n; ++i) ls >> s.q[i] >> comma;
    int label = 0;
    ls >> label >> comma >> s.clearance;
    if (!ls) throw std::runtime_error("malformed SCA csv line: " + line);
    s.collided = label != 0;
    data.samples.push_back(std::move(s));
  }
  return data;
}

void save_jsdf_csv(const JsdfDataset& data, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  const Eigen::Index n = data.lower.size();
  for (Eigen::Index i = 0; i < n; ++i) os << 'q' << i + 1 << ',';
  os << "px,py,pz";
  for (Eigen::Index i = 0; i < n; ++i) os << ",d" << i + 1;
  os << '\n';
  for (const auto& s : data.samples) {
    for (Eigen::Index i = 0; i < n; ++i) os << s.q[i] << ',';
    os << s.point.x() << ',' << s.point.y() << ',' << s.point.z();
    for (Eigen::Index i = 0; i < s.distances.size(); ++i) os << ',' << s.distances[i];
    os << '\n';
  }
}

}  // namespace pcbf
