#pragma once

#include "pcbf/types.hpp"

namespace pcbf::geometry {

/// Closest distance between segments [p1, q1] and [p2, q2]; handles
/// degenerate (point) segments and parallel configurations.
double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2);

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

/// Signed clearance between two capsules (negative when interpenetrating).
inline double capsule_clearance(const Vec3& a1, const Vec3& b1, double r1, const Vec3& a2, const Vec3& b2, double r2) {
  return segment_segment_distance(a1, b1, a2, b2) - r1 - r2;
}

/// Signed distance from a point to a capsule surface (negative inside).
inline double point_capsule_distance(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  return point_segment_distance(p, a, b) - r;
}

}  // namespace pcbf::geometry
