#pragma once

#include <vector>

#include "pcbf/dynamics.hpp"
#include "pcbf/robot_model.hpp"

namespace pcbf {

struct WorldCapsule {
  int link = 0;
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

std::vector<WorldCapsule> world_capsules(const RobotModel& model, const LinkFrames& frames);

struct SelfClearance {
  double clearance = 0.0;  // m, negative when interpenetrating
  int link_a = -1;
  int link_b = -1;
};

/// Minimum signed clearance over all non-exempt link pairs (capsule model).
SelfClearance self_collision_detail(const RobotModel& model, const Vec& q);
double self_collision_oracle(const RobotModel& model, const Vec& q);

/// Per moving link (1..n), the signed distance from `point` to the link's
/// capsules. Length n.
Vec link_sdf_oracle(const RobotModel& model, const Vec& q, const Vec3& point);

}  // namespace pcbf
