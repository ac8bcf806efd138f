#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcbf/types.hpp"

namespace pcbf {

/// Line segment swept by a sphere, expressed in its link frame.
struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

/// Mass properties of one link, in the link frame. `inertia` is taken about
/// the center of mass.
struct LinkInertia {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
};

/// Revolute joint. The child frame is parent * Trans(origin_xyz) *
/// origin_rotation * Rot(axis, q).
struct Joint {
  std::string name;
  Vec3 origin_xyz = Vec3::Zero();
  Mat3 origin_rotation = Mat3::Identity();
  Vec3 axis = Vec3::UnitZ();
  double lower = 0.0;
  double upper = 0.0;
  double velocity_limit = 0.0;
  double effort_limit = 0.0;
};

/// Serial chain description. Link 0 is the fixed base; link i (1..n) is
/// moved by joint i-1. `links` and `joints` both have n entries, `capsules`
/// has n + 1 (base first).
struct RobotModel {
  std::string name;
  std::vector<Joint> joints;
  std::vector<LinkInertia> links;
  std::vector<std::vector<Capsule>> capsules;
  std::set<std::pair<int, int>> adjacency;  // (i, j) with i < j, link indices
  int task_dim = 3;                         // 2 (planar xy), 3 or 6
  Vec3 gravity{0.0, 0.0, -9.81};
  Vec3 ee_offset = Vec3::Zero();  // end-effector point in the last link frame

  std::size_t dof() const { return joints.size(); }
  std::size_t link_count() const { return joints.size() + 1; }

  Vec lower_limits() const;
  Vec upper_limits() const;
  Vec effort_limits() const;

  bool collision_exempt(int i, int j) const;

  /// Throws std::invalid_argument describing the first broken invariant.
  void validate() const;

  /// Adds every parent-child pair to `adjacency`.
  void add_chain_adjacency();
};

RobotModel robot_model_from_json(const nlohmann::json& j);
nlohmann::json robot_model_to_json(const RobotModel& model);
RobotModel load_robot_model(const std::filesystem::path& path);
void save_robot_model(const RobotModel& model, const std::filesystem::path& path);

/// Stable 64-bit FNV-1a hash (hex) over kinematics and collision geometry.
/// Trained boundary models record it so a mismatched robot is detected.
std::string geometry_fingerprint(const RobotModel& model);

/// Planar arm in the x-y plane, all joints about +z, links along local +x.
/// Each link carries its mass at the distal end (as a tiny sphere), a capsule
/// along the link and task_dim 2. Gravity acts along -y.
RobotModel make_planar_arm(std::span<const double> lengths, std::span<const double> masses,
                           double capsule_radius = 0.05);

Mat3 rotation_from_rpy(double roll, double pitch, double yaw);

}  // namespace pcbf
