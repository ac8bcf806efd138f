#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcbf/mlp.hpp"
#include "pcbf/robot_model.hpp"
#include "pcbf/types.hpp"

namespace pcbf {

/// Feedback gains of the second-order barrier condition
///   hddot >= -k1 h - k2 hdot.
struct BarrierGains {
  double k1 = 64.0;
  double k2 = 16.0;

  /// k1 = p1 p2, k2 = -(p1 + p2) for real poles p1, p2 < 0.
  static BarrierGains from_poles(double p1, double p2);
  void validate() const;
};

enum class BarrierKind { JointUpper, JointLower, SelfCollision, ExternalCollision, Singularity };

std::string to_string(BarrierKind kind);

/// Linear inequality a . qddot >= b on joint accelerations.
struct BarrierRow {
  Vec a;
  double b = 0.0;
  BarrierKind kind = BarrierKind::JointUpper;
  bool hard = true;
  int joint = -1;     // joint-limit rows
  int link = -1;      // external-collision rows (1-based link index)
  int obstacle = -1;  // external-collision rows
  double h = 0.0;
  double hdot = 0.0;
};

inline bool is_hard(BarrierKind kind) {
  return kind == BarrierKind::JointUpper || kind == BarrierKind::JointLower || kind == BarrierKind::SelfCollision;
}

/// Two rows per joint:
///   -qddot_j >= -k1 (q+ - q - eps_hi) + k2 qdot_j
///    qddot_j >= -k1 (q - q- - eps_lo) - k2 qdot_j
std::vector<BarrierRow> joint_limit_rows(const Vec& q, const Vec& qdot, const RobotModel& model, double eps_lo,
                                         double eps_hi, const BarrierGains& gains);

/// grad_h . qddot >= -k1 h - k2 (grad_h . qdot) - qdot^T hess(h) qdot.
BarrierRow ecbf_row(double h, const Vec& grad_h, double hess_quad, const Vec& qdot, const BarrierGains& gains,
                    BarrierKind kind);

/// h = Gamma(q) - eps_sca with the classifier's analytic derivatives.
BarrierRow sca_row(const Vec& q, const Vec& qdot, const MlpModel& classifier, double eps_sca,
                   const BarrierGains& gains);

/// Spherical obstacle; its radius is added to the clearance margin.
struct Obstacle {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// One soft row per (link, obstacle): h = Gamma_i(q, center) - (eps_scf + radius).
/// `links` are 1-based moving-link indices.
std::vector<BarrierRow> eca_rows(const Vec& q, const Vec& qdot, const MlpModel& jsdf,
                                 const std::vector<Obstacle>& obstacles, double eps_scf, const std::vector<int>& links,
                                 const BarrierGains& gains);

/// Previous manipulability gradient for the temporal curvature term.
struct SaCache {
  std::optional<Vec> prev_grad;
  void reset() { prev_grad.reset(); }
};

/// h = MI(q) - eps_sa. The curvature term qdot^T hess(MI) qdot is replaced by
/// ((grad_t - grad_{t-1}) / dt) . qdot; zero on the first call. Updates the cache.
BarrierRow sa_row(const Vec& q, const Vec& qdot, const RobotModel& model, double eps_sa, const BarrierGains& gains,
                  SaCache& cache, double dt);

/// Same row with the exact curvature qdot^T hess qdot, hess from central
/// differences of the gradient.
BarrierRow sa_row_exact(const Vec& q, const Vec& qdot, const RobotModel& model, double eps_sa,
                        const BarrierGains& gains, double fd_step = 1e-5);

/// Rows on the torque input after substituting qddot = H^-1 (tau + tau_ext - bias):
///   (a^T H^-1) tau >= b - a^T H^-1 (tau_ext - bias).
struct TorqueRows {
  Mat a;  // rows x n
  Vec b;
};

TorqueRows rows_to_torque_space(const std::vector<BarrierRow>& rows, const Mat& H, const Vec& bias, const Vec& tau_ext);

}  // namespace pcbf
