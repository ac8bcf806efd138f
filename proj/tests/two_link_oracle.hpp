#pragma once

#include <cmath>

#include "pcbf/types.hpp"

namespace pcbf::test {

// Hand-derived Lagrangian dynamics of a planar two-link arm with point masses
// at the link tips, rotating about z with gravity along -y.
struct TwoLinkOracle {
  double l1, l2, m1, m2, g = 9.81;

  Mat H(const Vec& q) const {
    const double c2 = std::cos(q[1]);
    Mat h(2, 2);
    h(0, 0) = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2 * l1 * l2 * c2);
    h(0, 1) = h(1, 0) = m2 * (l2 * l2 + l1 * l2 * c2);
    h(1, 1) = m2 * l2 * l2;
    return h;
  }
  Vec bias(const Vec& q, const Vec& qd) const {
    const double s2 = std::sin(q[1]), c1 = std::cos(q[0]), c12 = std::cos(q[0] + q[1]);
    Vec b(2);
    b[0] = -m2 * l1 * l2 * s2 * (2 * qd[0] * qd[1] + qd[1] * qd[1]) + (m1 + m2) * g * l1 * c1 + m2 * g * l2 * c12;
    b[1] = m2 * l1 * l2 * s2 * qd[0] * qd[0] + m2 * g * l2 * c12;
    return b;
  }
};

}  // namespace pcbf::test
