#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pcbf/barriers.hpp"
#include "pcbf/dynamics.hpp"
#include "pcbf/motion_plan.hpp"
#include "pcbf/passive_control.hpp"
#include "pcbf/qp.hpp"
#include "pcbf/rcbf_qp.hpp"

namespace pcbf {

/// Constant end-effector force applied on [start, end).
struct ForceSegment {
  double start = 0.0;
  double end = 0.0;
  Vec force;
};

struct BarrierConfig {
  BarrierGains gains;
  bool joint_limits = true;
  double joint_margin = 0.05;  // rad
  bool self_collision = true;
  double sca_threshold = 10.0;  // classifier units
  bool external_collision = false;
  double eca_margin = 0.10;  // m, added to each obstacle radius
  std::vector<int> eca_links;  // empty means every moving link
  bool singularity = false;
  double sa_threshold = 0.1;
};

/// Constraint groups as named on the command line.
enum class ConstraintGroup { JointLimits, SelfCollision, ExternalCollision, Singularity };

ConstraintGroup parse_constraint_group(const std::string& name);  // C1..C4

struct Scenario {
  std::string name;
  std::string description;
  std::filesystem::path source;  // file the scenario was read from, if any

  std::shared_ptr<const RobotModel> robot;
  std::filesystem::path sca_path;
  std::filesystem::path jsdf_path;
  std::shared_ptr<const MlpModel> sca;   // loaded when self-collision rows are used
  std::shared_ptr<const MlpModel> jsdf;  // loaded when external-collision rows are used

  LinearDS plan;
  DampingSpec damping;
  JointState initial;
  double dt = 1e-3;
  double duration = 1.0;

  BarrierConfig barriers;
  std::vector<Obstacle> obstacles;
  std::vector<ForceSegment> forces;

  RcbfWeights weights;
  QPSettings qp;
  double fallback_damping = 10.0;  // tau = -k_d qdot + G when the QP fails
  std::uint64_t seed = 1;

  Vec force_at(double t) const;
  std::vector<int> eca_links() const;
  void disable(ConstraintGroup group);
  /// Loads the boundary models needed by the enabled constraints. Missing
  /// files raise std::runtime_error with a hint on how to produce them.
  void load_models();
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Reads a "pcbf.scenario/1" JSON file. Relative paths are resolved against
/// the file's directory. Models are loaded for the enabled constraints.
Scenario load_scenario(const std::filesystem::path& path);
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct ScenarioEntry {
  std::string name;
  std::string description;
  std::filesystem::path path;
};

/// Scenario files shipped in `<data_dir>/scenarios`, sorted by file name.
std::vector<ScenarioEntry> scenario_library(const std::filesystem::path& data_dir);

/// Data directory: $PCBF_DATA_DIR if set, else the build-time default.
std::filesystem::path default_data_dir();

}  // namespace pcbf
