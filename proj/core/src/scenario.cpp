#include "pcbf/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pcbf/training.hpp"

#ifndef PCBF_DEFAULT_DATA_DIR
#define PCBF_DEFAULT_DATA_DIR "data"
#endif

namespace pcbf {

namespace {

using nlohmann::json;

Vec vec_from(const json& j, const char* what) {
  require(j.is_array(), std::string("scenario: '") + what + "' must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::shared_ptr<const MlpModel> load_model_checked(const std::filesystem::path& path, const RobotModel& robot,
                                                   const char* kind, const char* command) {
  if (path.empty() || !std::filesystem::exists(path))
    throw std::runtime_error(std::string(kind) + " model file '" + path.string() + "' not found; produce it with `pcbf " +
                             command + " --robot <robot.json> --out " + path.string() + "`");
  auto model = std::make_shared<MlpModel>(load_mlp(path));
  const auto it = model->metadata.find("robot_fingerprint");
  if (it != model->metadata.end() && it->second != geometry_fingerprint(robot))
    throw std::runtime_error(std::string(kind) + " model '" + path.string() + "' was trained for a different robot (" +
                             it->second + " vs " + geometry_fingerprint(robot) + "); retrain it with `pcbf " + command +
                             "`");
  return model;
}

}  // namespace

ConstraintGroup parse_constraint_group(const std::string& name) {
  if (name == "C1") return ConstraintGroup::JointLimits;
  if (name == "C2") return ConstraintGroup::SelfCollision;
  if (name == "C3") return ConstraintGroup::ExternalCollision;
  if (name == "C4") return ConstraintGroup::Singularity;
  throw std::invalid_argument("unknown constraint group '" + name + "' (expected C1, C2, C3 or C4)");
}

Vec Scenario::force_at(double t) const {
  Vec f = Vec::Zero(robot ? robot->task_dim : 3);
  for (const auto& seg : forces)
    if (t >= seg.start && t < seg.end) f += seg.force;
  return f;
}

std::vector<int> Scenario::eca_links() const {
  if (!barriers.eca_links.empty()) return barriers.eca_links;
  std::vector<int> all(robot->dof());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i + 1);
  return all;
}

void Scenario::disable(ConstraintGroup group) {
  switch (group) {
    case ConstraintGroup::JointLimits: barriers.joint_limits = false; break;
    case ConstraintGroup::SelfCollision: barriers.self_collision = false; break;
    case ConstraintGroup::ExternalCollision: barriers.external_collision = false; break;
    case ConstraintGroup::Singularity: barriers.singularity = false; break;
  }
}

void Scenario::load_models() {
  // The classifier is also used for logging h_SCA, so load it whenever a path is given.
  if (!sca && (barriers.self_collision || (!sca_path.empty() && std::filesystem::exists(sca_path))))
    sca = load_model_checked(sca_path, *robot, "self-collision", "train-sca");
  if (!jsdf && barriers.external_collision) jsdf = load_model_checked(jsdf_path, *robot, "distance", "train-jsdf");
}

void Scenario::validate() const {
  require(robot != nullptr, "scenario: no robot model");
  const auto n = static_cast<Eigen::Index>(robot->dof());
  const Eigen::Index d = robot->task_dim;
  require(dt > 0.0 && dt <= 0.01, "scenario: dt must lie in (0, 0.01]");
  require(duration > 0.0, "scenario: duration must be positive");
  require(plan.attractor.size() == d, "scenario: attractor size must equal the task dimension");
  plan.validate();
  require(damping.lambdas.size() == d, "scenario: damping needs one value per task dimension");
  damping.validate();
  require(initial.q.size() == n && initial.qdot.size() == n, "scenario: initial state size mismatch");
  const Vec lo = robot->lower_limits();
  const Vec hi = robot->upper_limits();
  require((initial.q.array() > lo.array()).all() && (initial.q.array() < hi.array()).all(),
          "scenario: initial q must lie strictly inside the joint limits");
  barriers.gains.validate();
  require(barriers.joint_margin >= 0.0 && barriers.eca_margin >= 0.0, "scenario: margins must be nonnegative");
  for (const auto& seg : forces) {
    require(seg.force.size() == d, "scenario: force size must equal the task dimension");
    require(seg.end >= seg.start, "scenario: force segment ends before it starts");
  }
  for (const auto& o : obstacles) require(o.radius >= 0.0, "scenario: obstacle radius must be nonnegative");
  for (int link : barriers.eca_links)
    require(link >= 1 && link <= static_cast<int>(n), "scenario: eca link index out of range");
  require(fallback_damping >= 0.0, "scenario: fallback damping must be nonnegative");
  if (barriers.self_collision) {
    require(sca != nullptr, "scenario: self-collision rows enabled but no classifier loaded");
    const double gamma = sca_boundary(*sca, initial.q).value;
    require(gamma > barriers.sca_threshold, "scenario: initial configuration violates the self-collision threshold (" +
                                                std::to_string(gamma) + " <= " +
                                                std::to_string(barriers.sca_threshold) + ")");
  }
  if (barriers.external_collision) require(jsdf != nullptr, "scenario: external-collision rows enabled but no model");
}

Scenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  const std::string schema = j.value("schema", "");
  require(schema == "pcbf.scenario/1", "scenario: unsupported schema '" + schema + "' (expected pcbf.scenario/1)");
  Scenario s;
  s.name = j.value("name", "scenario");
  s.description = j.value("description", "");
  s.robot = std::make_shared<RobotModel>(load_robot_model(resolve(base_dir, j.at("robot").get<std::string>())));
  if (j.contains("models")) {
    const auto& m = j["models"];
    if (m.contains("sca")) s.sca_path = resolve(base_dir, m["sca"].get<std::string>());
    if (m.contains("jsdf")) s.jsdf_path = resolve(base_dir, m["jsdf"].get<std::string>());
  }

  const auto& plan = j.at("plan");
  const Vec attractor = vec_from(plan.at("attractor"), "plan.attractor");
  if (plan.at("gain").is_number()) {
    s.plan = LinearDS::isotropic(attractor, plan["gain"].get<double>());
  } else {
    const auto& rows = plan["gain"];
    Mat q(attractor.size(), attractor.size());
    require(rows.size() == static_cast<std::size_t>(attractor.size()), "scenario: plan.gain row count mismatch");
    for (std::size_t r = 0; r < rows.size(); ++r) q.row(static_cast<Eigen::Index>(r)) = vec_from(rows[r], "plan.gain").transpose();
    s.plan = LinearDS{attractor, q};
  }
  s.damping.lambdas = vec_from(j.at("damping"), "damping");

  const auto& init = j.at("initial");
  s.initial.q = vec_from(init.at("q"), "initial.q");
  s.initial.qdot = init.contains("qdot") ? vec_from(init["qdot"], "initial.qdot") : Vec::Zero(s.initial.q.size());
  s.dt = j.value("dt", 1e-3);
  s.duration = j.at("duration").get<double>();
  s.seed = j.value("seed", std::uint64_t{1});

  if (j.contains("barriers")) {
    const auto& b = j["barriers"];
    if (b.contains("poles")) {
      const Vec p = vec_from(b["poles"], "barriers.poles");
      require(p.size() == 2, "scenario: barriers.poles needs two values");
      s.barriers.gains = BarrierGains::from_poles(p[0], p[1]);
    }
    if (b.contains("joint_limits")) {
      s.barriers.joint_limits = b["joint_limits"].value("enabled", true);
      s.barriers.joint_margin = b["joint_limits"].value("margin", s.barriers.joint_margin);
    }
    if (b.contains("self_collision")) {
      s.barriers.self_collision = b["self_collision"].value("enabled", true);
      s.barriers.sca_threshold = b["self_collision"].value("threshold", s.barriers.sca_threshold);
    }
    if (b.contains("external_collision")) {
      const auto& e = b["external_collision"];
      s.barriers.external_collision = e.value("enabled", true);
      s.barriers.eca_margin = e.value("margin", s.barriers.eca_margin);
      s.barriers.eca_links = e.value("links", std::vector<int>{});
    }
    if (b.contains("singularity")) {
      s.barriers.singularity = b["singularity"].value("enabled", true);
      s.barriers.sa_threshold = b["singularity"].value("threshold", s.barriers.sa_threshold);
    }
  }
  for (const auto& o : j.value("obstacles", json::array())) {
    Obstacle ob;
    const Vec c = vec_from(o.at("center"), "obstacle.center");
    require(c.size() == 3, "scenario: obstacle center needs three coordinates");
    ob.center = c;
    ob.radius = o.value("radius", 0.0);
    s.obstacles.push_back(ob);
  }
  for (const auto& f : j.value("forces", json::array()))
    s.forces.push_back({f.at("start").get<double>(), f.at("end").get<double>(), vec_from(f.at("force"), "force")});
  if (j.contains("qp")) {
    const auto& q = j["qp"];
    s.weights.eca = q.value("eca_weight", s.weights.eca);
    s.weights.sa = q.value("sa_weight", s.weights.sa);
    s.weights.rho = q.value("rho", s.weights.rho);
    s.qp.tolerance = q.value("tolerance", s.qp.tolerance);
    s.qp.max_iterations = q.value("max_iterations", s.qp.max_iterations);
  }
  s.fallback_damping = j.value("fallback_damping", s.fallback_damping);
  s.load_models();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw std::runtime_error("scenario file " + path.string() + ": " + e.what());
  }
  Scenario s = scenario_from_json(j, path.parent_path());
  s.source = path;
  return s;
}

std::vector<ScenarioEntry> scenario_library(const std::filesystem::path& data_dir) {
  const auto dir = data_dir / "scenarios";
  std::vector<ScenarioEntry> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream is(entry.path());
    const json j = json::parse(is, nullptr, false);
    if (j.is_discarded() || j.value("schema", "") != "pcbf.scenario/1") continue;
    out.push_back({j.value("name", entry.path().stem().string()), j.value("description", ""), entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path.filename() < b.path.filename(); });
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PCBF_DATA_DIR"); env && *env) return env;
  return PCBF_DEFAULT_DATA_DIR;
}

}  // namespace pcbf
