#include "pcbf/collision_oracle.hpp"

#include <algorithm>
#include <limits>

#include "pcbf/geometry.hpp"

namespace pcbf {

std::vector<WorldCapsule> world_capsules(const RobotModel& model, const LinkFrames& frames) {
  std::vector<WorldCapsule> out;
  for (std::size_t link = 0; link < model.capsules.size(); ++link) {
    const Eigen::Isometry3d& t = frames.frames[link];
    for (const Capsule& c : model.capsules[link]) out.push_back({static_cast<int>(link), t * c.a, t * c.b, c.radius});
  }
  return out;
}

SelfClearance self_collision_detail(const RobotModel& model, const Vec& q) {
  const auto caps = world_capsules(model, forward_kinematics(model, q));
  SelfClearance best{std::numeric_limits<double>::infinity(), -1, -1};
  for (std::size_t i = 0; i < caps.size(); ++i) {
    for (std::size_t j = i + 1; j < caps.size(); ++j) {
      if (model.collision_exempt(caps[i].link, caps[j].link)) continue;
      const double c = geometry::capsule_clearance(caps[i].a, caps[i].b, caps[i].radius, caps[j].a, caps[j].b,
                                                   caps[j].radius);
      if (c < best.clearance) best = {c, caps[i].link, caps[j].link};
    }
  }
  return best;
}

double self_collision_oracle(const RobotModel& model, const Vec& q) { return self_collision_detail(model, q).clearance; }

Vec link_sdf_oracle(const RobotModel& model, const Vec& q, const Vec3& point) {
  const LinkFrames frames = forward_kinematics(model, q);
  const std::size_t n = model.dof();
  Vec d = Vec::Constant(n, std::numeric_limits<double>::infinity());
  for (std::size_t link = 1; link <= n; ++link) {
    const Eigen::Isometry3d& t = frames.frames[link];
    for (const Capsule& c : model.capsules[link])
      d[link - 1] = std::min(d[link - 1], geometry::point_capsule_distance(point, t * c.a, t * c.b, c.radius));
  }
  return d;
}

}  // namespace pcbf
