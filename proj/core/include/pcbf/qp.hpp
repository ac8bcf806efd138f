#pragma once

#include <string>
#include <vector>

#include "pcbf/types.hpp"

namespace pcbf {

/// minimize 1/2 z^T Q z + c^T z  subject to  A z >= l.
struct DenseQP {
  Mat Q;
  Vec c;
  Mat A;
  Vec l;

  Eigen::Index variables() const { return Q.rows(); }
  Eigen::Index rows() const { return A.rows(); }
  void validate() const;
  double objective(const Vec& z) const { return 0.5 * z.dot(Q * z) + c.dot(z); }
};

enum class QPStatus { Optimal, Infeasible, MaxIterations };

std::string to_string(QPStatus status);

struct KktResiduals {
  double stationarity = 0.0;     // |Q z + c - A^T mu|
  double primal = 0.0;           // |min(A z - l, 0)|
  double dual = 0.0;             // |min(mu, 0)|
  double complementarity = 0.0;  // |mu^T (A z - l)|

  double max() const;
};

KktResiduals kkt_residual(const DenseQP& qp, const Vec& z, const Vec& multipliers);

struct QPSolution {
  QPStatus status = QPStatus::MaxIterations;
  Vec z;
  Vec multipliers;
  KktResiduals kkt;
  std::vector<int> active_set;  // rows with multiplier > active_tolerance
  int iterations = 0;
  bool polished = false;
  double infeasibility = 0.0;  // smallest uniform relaxation making the rows feasible (Infeasible only)
};

struct QPSettings {
  double tolerance = 1e-9;  // on scaled residuals and mean complementarity
  int max_iterations = 100;
  double active_tolerance = 1e-9;
  double infeasibility_tolerance = 1e-7;  // phase-one threshold on normalized rows
  bool polish = true;
};

/// Mehrotra predictor-corrector interior-point method on the row-normalized
/// problem, followed by an equality-constrained solve on the identified active
/// set. When the iteration fails, a phase-one problem decides between
/// Infeasible and MaxIterations. Throws NumericalError on NaN iterates and
/// std::invalid_argument on malformed input.
QPSolution solve_qp(const DenseQP& qp, const QPSettings& settings = {});

}  // namespace pcbf
