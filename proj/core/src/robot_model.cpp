#include "pcbf/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pcbf {

namespace {

using nlohmann::json;

Vec3 vec3_from(const json& j, const char* what) {
  require(j.is_array() && j.size() == 3, std::string(what) + ": expected array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Capsule capsule_from(const json& j) {
  Capsule c;
  c.a = vec3_from(j.at("a"), "capsule.a");
  c.b = vec3_from(j.at("b"), "capsule.b");
  c.radius = j.at("radius").get<double>();
  return c;
}

json capsule_to(const Capsule& c) {
  return json{{"a", vec3_to(c.a)}, {"b", vec3_to(c.b)}, {"radius", c.radius}};
}

Mat3 inertia_from(const json& j) {
  const double ixx = j.at("ixx").get<double>();
  const double iyy = j.at("iyy").get<double>();
  const double izz = j.at("izz").get<double>();
  const double ixy = j.value("ixy", 0.0);
  const double ixz = j.value("ixz", 0.0);
  const double iyz = j.value("iyz", 0.0);
  Mat3 m;
  m << ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz;
  return m;
}

json inertia_to(const Mat3& m) {
  return json{{"ixx", m(0, 0)}, {"iyy", m(1, 1)}, {"izz", m(2, 2)},
              {"ixy", m(0, 1)}, {"ixz", m(0, 2)}, {"iyz", m(1, 2)}};
}

Vec3 rpy_from_rotation(const Mat3& r) {
  // Inverse of Rz(yaw) * Ry(pitch) * Rx(roll).
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  void number(double v) { bytes(&v, sizeof v); }
  void vec(const Vec3& v) {
    for (int i = 0; i < 3; ++i) number(v[i]);
  }
};

}  // namespace

Mat3 rotation_from_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Vec RobotModel::lower_limits() const {
  Vec v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].lower;
  return v;
}

Vec RobotModel::upper_limits() const {
  Vec v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].upper;
  return v;
}

Vec RobotModel::effort_limits() const {
  Vec v(dof());
  for (std::size_t i = 0; i < dof(); ++i) v[i] = joints[i].effort_limit;
  return v;
}

bool RobotModel::collision_exempt(int i, int j) const {
  if (i == j) return true;
  if (i > j) std::swap(i, j);
  return adjacency.count({i, j}) > 0;
}

void RobotModel::add_chain_adjacency() {
  for (int i = 0; i < static_cast<int>(dof()); ++i) adjacency.insert({i, i + 1});
}

void RobotModel::validate() const {
  const std::size_t n = dof();
  require(n >= 1, "robot model: at least one joint required");
  require(links.size() == n, "robot model: links must match joints");
  require(capsules.size() == n + 1, "robot model: capsule lists must cover base plus every link");
  require(task_dim == 2 || task_dim == 3 || task_dim == 6, "robot model: task_dim must be 2, 3 or 6");
  for (std::size_t i = 0; i < n; ++i) {
    const Joint& jt = joints[i];
    require(jt.lower < jt.upper, "robot model: joint '" + jt.name + "' needs lower < upper");
    require(std::abs(jt.axis.norm() - 1.0) < 1e-9, "robot model: joint '" + jt.name + "' axis must be unit");
    require(jt.effort_limit > 0.0, "robot model: joint '" + jt.name + "' needs a positive effort limit");
    const LinkInertia& li = links[i];
    require(li.mass > 0.0, "robot model: link " + std::to_string(i + 1) + " mass must be positive");
    require((li.inertia - li.inertia.transpose()).cwiseAbs().maxCoeff() < 1e-12,
            "robot model: link " + std::to_string(i + 1) + " inertia must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(li.inertia, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() > 0.0,
            "robot model: link " + std::to_string(i + 1) + " inertia must be positive definite");
  }
  for (const auto& list : capsules)
    for (const auto& c : list) require(c.radius > 0.0, "robot model: capsule radius must be positive");
  for (int i = 0; i < static_cast<int>(n); ++i)
    require(adjacency.count({i, i + 1}) > 0, "robot model: adjacency must contain every parent-child pair");
}

RobotModel robot_model_from_json(const json& j) {
  const std::string schema = j.value("schema", "");
  require(schema == "pcbf.robot/1", "robot file: unsupported schema '" + schema + "' (expected pcbf.robot/1)");
  RobotModel m;
  m.name = j.value("name", "robot");
  m.task_dim = j.value("task_dim", 3);
  if (j.contains("gravity")) m.gravity = vec3_from(j["gravity"], "gravity");
  if (j.contains("ee_offset")) m.ee_offset = vec3_from(j["ee_offset"], "ee_offset");

  m.capsules.emplace_back();
  for (const auto& c : j.value("base_capsules", json::array())) m.capsules.back().push_back(capsule_from(c));

  for (const auto& jj : j.at("joints")) {
    Joint jt;
    jt.name = jj.value("name", "joint" + std::to_string(m.joints.size() + 1));
    const auto& origin = jj.at("origin");
    jt.origin_xyz = vec3_from(origin.at("xyz"), "origin.xyz");
    const Vec3 rpy = origin.contains("rpy") ? vec3_from(origin["rpy"], "origin.rpy") : Vec3::Zero();
    jt.origin_rotation = rotation_from_rpy(rpy[0], rpy[1], rpy[2]);
    jt.axis = vec3_from(jj.at("axis"), "axis");
    const auto& lim = jj.at("limits");
    jt.lower = lim.at("lower").get<double>();
    jt.upper = lim.at("upper").get<double>();
    jt.velocity_limit = lim.value("velocity", 0.0);
    jt.effort_limit = lim.at("effort").get<double>();
    m.joints.push_back(jt);

    const auto& lk = jj.at("link");
    LinkInertia li;
    li.mass = lk.at("mass").get<double>();
    li.com = vec3_from(lk.at("com"), "link.com");
    li.inertia = inertia_from(lk.at("inertia"));
    m.links.push_back(li);
    m.capsules.emplace_back();
    for (const auto& c : lk.value("capsules", json::array())) m.capsules.back().push_back(capsule_from(c));
  }
  m.add_chain_adjacency();
  for (const auto& p : j.value("extra_adjacent_pairs", json::array())) {
    int a = p.at(0).get<int>();
    int b = p.at(1).get<int>();
    if (a > b) std::swap(a, b);
    m.adjacency.insert({a, b});
  }
  m.validate();
  return m;
}

json robot_model_to_json(const RobotModel& m) {
  json j;
  j["schema"] = "pcbf.robot/1";
  j["name"] = m.name;
  j["task_dim"] = m.task_dim;
  j["gravity"] = vec3_to(m.gravity);
  j["ee_offset"] = vec3_to(m.ee_offset);
  j["base_capsules"] = json::array();
  for (const auto& c : m.capsules.at(0)) j["base_capsules"].push_back(capsule_to(c));
  j["joints"] = json::array();
  for (std::size_t i = 0; i < m.dof(); ++i) {
    const Joint& jt = m.joints[i];
    json jj;
    jj["name"] = jt.name;
    jj["origin"] = {{"xyz", vec3_to(jt.origin_xyz)}, {"rpy", vec3_to(rpy_from_rotation(jt.origin_rotation))}};
    jj["axis"] = vec3_to(jt.axis);
    jj["limits"] = {{"lower", jt.lower}, {"upper", jt.upper}, {"velocity", jt.velocity_limit}, {"effort", jt.effort_limit}};
    json caps = json::array();
    for (const auto& c : m.capsules[i + 1]) caps.push_back(capsule_to(c));
    jj["link"] = {{"mass", m.links[i].mass}, {"com", vec3_to(m.links[i].com)},
                  {"inertia", inertia_to(m.links[i].inertia)}, {"capsules", caps}};
    j["joints"].push_back(jj);
  }
  json extra = json::array();
  for (const auto& [a, b] : m.adjacency)
    if (b != a + 1) extra.push_back({a, b});
  j["extra_adjacent_pairs"] = extra;
  return j;
}

RobotModel load_robot_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open robot file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("robot file " + path.string() + ": " + e.what());
  }
  return robot_model_from_json(j);
}

void save_robot_model(const RobotModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write robot file " + path.string());
  out << robot_model_to_json(model).dump(2) << '\n';
}

std::string geometry_fingerprint(const RobotModel& m) {
  Fnv1a h;
  for (const auto& jt : m.joints) {
    h.vec(jt.origin_xyz);
    for (int r = 0; r < 3; ++r) h.vec(jt.origin_rotation.row(r).transpose());
    h.vec(jt.axis);
    h.number(jt.lower);
    h.number(jt.upper);
  }
  for (const auto& list : m.capsules) {
    h.number(static_cast<double>(list.size()));
    for (const auto& c : list) {
      h.vec(c.a);
      h.vec(c.b);
      h.number(c.radius);
    }
  }
  for (const auto& [a, b] : m.adjacency) {
    h.number(a);
    h.number(b);
  }
  h.vec(m.ee_offset);
  std::ostringstream os;
  os << std::hex << h.h;
  return os.str();
}

RobotModel make_planar_arm(std::span<const double> lengths, std::span<const double> masses, double capsule_radius) {
  require(!lengths.empty() && lengths.size() == masses.size(), "planar arm: lengths and masses must match");
  RobotModel m;
  m.name = "planar" + std::to_string(lengths.size());
  m.task_dim = 2;
  m.gravity = Vec3(0.0, -9.81, 0.0);
  m.capsules.emplace_back();
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    Joint jt;
    jt.name = "joint" + std::to_string(i + 1);
    jt.origin_xyz = i == 0 ? Vec3::Zero() : Vec3(lengths[i - 1], 0.0, 0.0);
    jt.axis = Vec3::UnitZ();
    jt.lower = -M_PI;
    jt.upper = M_PI;
    jt.velocity_limit = 10.0;
    jt.effort_limit = 1e4;
    m.joints.push_back(jt);
    LinkInertia li;
    li.mass = masses[i];
    li.com = Vec3(lengths[i], 0.0, 0.0);
    li.inertia = 1e-12 * Mat3::Identity();
    m.links.push_back(li);
    m.capsules.push_back({Capsule{Vec3::Zero(), Vec3(lengths[i], 0.0, 0.0), capsule_radius}});
  }
  m.ee_offset = Vec3(lengths.back(), 0.0, 0.0);
  m.add_chain_adjacency();
  m.validate();
  return m;
}

}  // namespace pcbf
