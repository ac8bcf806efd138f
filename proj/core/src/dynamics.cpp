#include "pcbf/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace pcbf {

namespace {

void check_q(const RobotModel& model, const Vec& q, const char* what) {
  require(static_cast<std::size_t>(q.size()) == model.dof(),
          std::string(what) + ": expected " + std::to_string(model.dof()) + " joint values, got " +
              std::to_string(q.size()));
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace

LinkFrames forward_kinematics(const RobotModel& model, const Vec& q) {
  check_q(model, q, "forward_kinematics");
  const std::size_t n = model.dof();
  LinkFrames out;
  out.frames.reserve(n + 1);
  out.joint_axes.reserve(n);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  out.frames.push_back(t);
  for (std::size_t i = 0; i < n; ++i) {
    const Joint& jt = model.joints[i];
    Eigen::Isometry3d fixed = Eigen::Isometry3d::Identity();
    fixed.translation() = jt.origin_xyz;
    fixed.linear() = jt.origin_rotation;
    t = t * fixed;
    out.joint_axes.push_back(t.linear() * jt.axis);
    t.rotate(Eigen::AngleAxisd(q[i], jt.axis));
    out.frames.push_back(t);
  }
  out.ee_position = t * model.ee_offset;
  out.ee_rotation = t.linear();
  return out;
}

Vec task_position(const RobotModel& model, const LinkFrames& frames) {
  const Vec3& p = frames.ee_position;
  switch (model.task_dim) {
    case 2:
      return p.head<2>();
    case 3:
      return p;
    default: {
      Vec x(6);
      Eigen::AngleAxisd aa(frames.ee_rotation);
      x << p, aa.angle() * aa.axis();
      return x;
    }
  }
}

Vec task_position(const RobotModel& model, const Vec& q) { return task_position(model, forward_kinematics(model, q)); }

Mat jacobian(const RobotModel& model, const LinkFrames& frames) {
  const std::size_t n = model.dof();
  Mat full(6, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& z = frames.joint_axes[i];
    const Vec3 o = frames.frames[i + 1].translation();
    full.block<3, 1>(0, i) = z.cross(frames.ee_position - o);
    full.block<3, 1>(3, i) = z;
  }
  switch (model.task_dim) {
    case 2:
      return full.topRows(2);
    case 3:
      return full.topRows(3);
    default:
      return full;
  }
}

Mat jacobian(const RobotModel& model, const Vec& q) {
  check_q(model, q, "jacobian");
  return jacobian(model, forward_kinematics(model, q));
}

TaskState task_state(const RobotModel& model, const JointState& state) {
  const LinkFrames f = forward_kinematics(model, state.q);
  check_q(model, state.qdot, "task_state");
  return {task_position(model, f), jacobian(model, f) * state.qdot};
}

Mat mass_matrix(const RobotModel& model, const Vec& q) {
  check_q(model, q, "mass_matrix");
  const std::size_t n = model.dof();
  const LinkFrames f = forward_kinematics(model, q);

  // Composite bodies C_i = links i..n, accumulated tip to base: mass, world
  // center of mass and rotational inertia about that center.
  std::vector<double> cm(n);
  std::vector<Vec3> cc(n);
  std::vector<Mat3> ci(n);
  double mass = 0.0;
  Vec3 first_moment = Vec3::Zero();
  Mat3 inertia_origin = Mat3::Zero();  // about world origin
  for (std::size_t k = n; k-- > 0;) {
    const LinkInertia& li = model.links[k];
    const Eigen::Isometry3d& t = f.frames[k + 1];
    const Vec3 c = t * li.com;
    const Mat3 ic = t.linear() * li.inertia * t.linear().transpose();
    mass += li.mass;
    first_moment += li.mass * c;
    inertia_origin += ic - li.mass * skew(c) * skew(c);
    cm[k] = mass;
    cc[k] = first_moment / mass;
    ci[k] = inertia_origin + mass * skew(cc[k]) * skew(cc[k]);
  }

  Mat h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& zi = f.joint_axes[i];
    const Vec3 oi = f.frames[i + 1].translation();
    // Spatial force needed to give composite body i unit acceleration about axis i.
    const Vec3 force = cm[i] * zi.cross(cc[i] - oi);
    const Vec3 moment_oi = ci[i] * zi + (cc[i] - oi).cross(force);
    for (std::size_t j = 0; j <= i; ++j) {
      const Vec3 oj = f.frames[j + 1].translation();
      const double v = f.joint_axes[j].dot(moment_oi + (oi - oj).cross(force));
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

Vec inverse_dynamics(const RobotModel& model, const Vec& q, const Vec& qdot, const Vec& qddot) {
  check_q(model, q, "inverse_dynamics");
  check_q(model, qdot, "inverse_dynamics");
  check_q(model, qddot, "inverse_dynamics");
  const std::size_t n = model.dof();
  const LinkFrames f = forward_kinematics(model, q);

  std::vector<Vec3> omega(n), alpha(n), acc_o(n), acc_c(n), com(n);
  Vec3 w = Vec3::Zero();
  Vec3 dw = Vec3::Zero();
  Vec3 a = -model.gravity;  // base acceleration absorbs gravity
  Vec3 o_prev = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 o = f.frames[i + 1].translation();
    const Vec3 r = o - o_prev;
    a = a + dw.cross(r) + w.cross(w.cross(r));
    const Vec3& z = f.joint_axes[i];
    const Vec3 w_new = w + z * qdot[i];
    dw = dw + z * qddot[i] + w_new.cross(z * qdot[i]);
    w = w_new;
    omega[i] = w;
    alpha[i] = dw;
    acc_o[i] = a;
    com[i] = f.frames[i + 1] * model.links[i].com;
    const Vec3 rc = com[i] - o;
    acc_c[i] = a + dw.cross(rc) + w.cross(w.cross(rc));
    o_prev = o;
  }

  Vec tau(n);
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();  // about the child joint origin
  Vec3 o_child = Vec3::Zero();
  for (std::size_t i = n; i-- > 0;) {
    const LinkInertia& li = model.links[i];
    const Eigen::Isometry3d& t = f.frames[i + 1];
    const Vec3 o = t.translation();
    const Mat3 iw = t.linear() * li.inertia * t.linear().transpose();
    const Vec3 f_body = li.mass * acc_c[i];
    const Vec3 n_body = iw * alpha[i] + omega[i].cross(iw * omega[i]);
    Vec3 moment_o = n_body + (com[i] - o).cross(f_body);
    if (i + 1 < n) moment_o += moment + (o_child - o).cross(force);
    force = f_body + (i + 1 < n ? force : Vec3::Zero());
    moment = moment_o;
    o_child = o;
    tau[i] = f.joint_axes[i].dot(moment);
  }
  return tau;
}

Vec bias_forces(const RobotModel& model, const Vec& q, const Vec& qdot) {
  return inverse_dynamics(model, q, qdot, Vec::Zero(model.dof()));
}

Vec gravity_vector(const RobotModel& model, const Vec& q) {
  return inverse_dynamics(model, q, Vec::Zero(model.dof()), Vec::Zero(model.dof()));
}

Vec forward_dynamics(const RobotModel& model, const Vec& q, const Vec& qdot, const Vec& tau_c, const Vec& tau_ext) {
  check_q(model, tau_c, "forward_dynamics");
  check_q(model, tau_ext, "forward_dynamics");
  const Mat h = mass_matrix(model, q);
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success) throw NumericalError("forward_dynamics: mass matrix is not positive definite");
  return llt.solve(tau_c + tau_ext - bias_forces(model, q, qdot));
}

double manipulability_index(const Mat& J) {
  if (J.rows() > J.cols()) return 0.0;
  return Eigen::JacobiSVD<Mat>(J).singularValues().prod();
}

double manipulability_index(const RobotModel& model, const Vec& q) { return manipulability_index(jacobian(model, q)); }

Vec manipulability_gradient(const RobotModel& model, const Vec& q, double condition_cap, double fd_step) {
  check_q(model, q, "manipulability_gradient");
  const std::size_t n = model.dof();
  const Mat J = jacobian(model, q);
  const Mat jjt = J * J.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(jjt, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > condition_cap)
    throw NumericalError("manipulability_gradient: J J^T is near singular (condition " +
                         std::to_string(lo > 0.0 ? hi / lo : INFINITY) + ")");
  const double mi = std::sqrt(jjt.determinant());
  const Eigen::LDLT<Mat> ldlt(jjt);
  Vec grad(n);
  Vec qp = q;
  Vec qm = q;
  for (std::size_t i = 0; i < n; ++i) {
    qp[i] = q[i] + fd_step;
    qm[i] = q[i] - fd_step;
    const Mat dj = (jacobian(model, qp) - jacobian(model, qm)) / (2.0 * fd_step);
    qp[i] = q[i];
    qm[i] = q[i];
    grad[i] = mi * ldlt.solve(dj * J.transpose()).trace();
  }
  return grad;
}

Mat damped_pinv(const Mat& J, double lambda) { return damped_pinv_transpose(J, lambda).transpose(); }

Mat damped_pinv_transpose(const Mat& J, double lambda) {
  require(lambda >= 0.0, "damped_pinv: lambda must be nonnegative");
  Mat g = J * J.transpose();
  g.diagonal().array() += lambda * lambda;
  return g.ldlt().solve(J);
}

double adaptive_damping(double manipulability, double eps_sa, double base, double extra) {
  const double knee = 2.0 * eps_sa;
  if (knee <= 0.0 || manipulability >= knee) return base;
  const double s = 1.0 - std::max(manipulability, 0.0) / knee;
  return base + extra * s * s;
}

Mat task_inertia(const Mat& J, const Mat& H) {
  Eigen::LLT<Mat> llt(H);
  if (llt.info() != Eigen::Success) throw NumericalError("task_inertia: mass matrix is not positive definite");
  const Mat inv_h_jt = llt.solve(J.transpose());
  const Mat m = J * inv_h_jt;
  return m.ldlt().solve(Mat::Identity(m.rows(), m.cols()));
}

}  // namespace pcbf
