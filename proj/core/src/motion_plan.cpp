#include "pcbf/motion_plan.hpp"

namespace pcbf {

LinearDS LinearDS::isotropic(const Vec& attractor, double gain) {
  LinearDS ds{attractor, gain * Mat::Identity(attractor.size(), attractor.size())};
  ds.validate();
  return ds;
}

void LinearDS::validate() const {
  require(attractor.size() > 0, "LinearDS: empty attractor");
  require(gain.rows() == attractor.size() && gain.cols() == attractor.size(), "LinearDS: gain shape mismatch");
  require((gain - gain.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "LinearDS: gain must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(gain, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, "LinearDS: gain must be positive definite");
}

Vec eval_ds(const LinearDS& plan, const Vec& x) {
  require(x.size() == plan.attractor.size(), "eval_ds: dimension mismatch");
  return -2.0 * plan.gain * (x - plan.attractor);
}

double potential(const LinearDS& plan, const Vec& x) {
  require(x.size() == plan.attractor.size(), "potential: dimension mismatch");
  const Vec e = x - plan.attractor;
  return e.dot(plan.gain * e);
}

}  // namespace pcbf
