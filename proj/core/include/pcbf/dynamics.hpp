#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "pcbf/robot_model.hpp"
#include "pcbf/types.hpp"

namespace pcbf {

struct JointState {
  Vec q;
  Vec qdot;
};

struct TaskState {
  Vec x;
  Vec xdot;
};

/// World poses of every link frame (index 0 is the base) and the
/// end-effector point.
struct LinkFrames {
  std::vector<Eigen::Isometry3d> frames;
  std::vector<Vec3> joint_axes;  // world joint axes, one per joint
  Vec3 ee_position = Vec3::Zero();
  Mat3 ee_rotation = Mat3::Identity();
};

LinkFrames forward_kinematics(const RobotModel& model, const Vec& q);

/// Task coordinates: xy for task_dim 2, xyz for 3, xyz plus rotation vector for 6.
Vec task_position(const RobotModel& model, const LinkFrames& frames);
Vec task_position(const RobotModel& model, const Vec& q);

/// Geometric Jacobian (task_dim x n), revolute columns axis x moment arm.
Mat jacobian(const RobotModel& model, const LinkFrames& frames);
Mat jacobian(const RobotModel& model, const Vec& q);

TaskState task_state(const RobotModel& model, const JointState& state);

/// Composite-rigid-body inertia matrix.
Mat mass_matrix(const RobotModel& model, const Vec& q);

/// Recursive Newton-Euler inverse dynamics: H qddot + C qdot + G.
Vec inverse_dynamics(const RobotModel& model, const Vec& q, const Vec& qdot, const Vec& qddot);

/// C(q, qdot) qdot + G(q).
Vec bias_forces(const RobotModel& model, const Vec& q, const Vec& qdot);
Vec gravity_vector(const RobotModel& model, const Vec& q);

/// qddot = H^-1 (tau_c + tau_ext - bias), via Cholesky. Throws NumericalError
/// when H is not positive definite.
Vec forward_dynamics(const RobotModel& model, const Vec& q, const Vec& qdot, const Vec& tau_c, const Vec& tau_ext);

/// sqrt(det(J J^T)); 0 at exact singularities.
double manipulability_index(const Mat& J);
double manipulability_index(const RobotModel& model, const Vec& q);

/// Gradient of the manipulability index. dJ/dq_i is taken by central
/// differences of the geometric Jacobian with step `fd_step`. Throws
/// NumericalError when cond(J J^T) exceeds `condition_cap`.
Vec manipulability_gradient(const RobotModel& model, const Vec& q, double condition_cap = 1e10,
                            double fd_step = 1e-6);

/// J^T (J J^T + lambda^2 I)^-1, shape n x d.
Mat damped_pinv(const Mat& J, double lambda);

/// (J J^T + lambda^2 I)^-1 J, shape d x n. Maps joint torques to task forces.
Mat damped_pinv_transpose(const Mat& J, double lambda);

/// Regularization schedule for the task-force map: `base` far from
/// singularities, rising quadratically to `base + extra` as MI drops from
/// 2 eps_sa to zero.
double adaptive_damping(double manipulability, double eps_sa, double base = 1e-4, double extra = 0.05);

/// Dynamically consistent task-space inertia (J H^-1 J^T)^-1.
Mat task_inertia(const Mat& J, const Mat& H);

}  // namespace pcbf
