#pragma once

#include <iosfwd>
#include <vector>

#include "pcbf/motion_plan.hpp"
#include "pcbf/types.hpp"

namespace pcbf {

/// Damping eigenvalues: lambdas[0] acts along the desired motion, the rest
/// transverse to it [N s/m].
struct DampingSpec {
  Vec lambdas;
  void validate() const;
};

/// Orthonormal basis whose first column is f / |f|. The remaining columns come
/// from Gram-Schmidt over the canonical axes, skipping the axis most parallel
/// to f. Returns identity when |f| <= tol.
Mat damping_basis(const Vec& f, double tol = 1e-9);

/// D = V diag(lambdas) V^T.
Mat damping_matrix(const Mat& basis, const DampingSpec& spec);

/// Damping used by the controller: damping_matrix(damping_basis(f)) for
/// |f| > tol, lambda_1 I otherwise.
Mat task_damping(const Vec& f, const DampingSpec& spec, double tol = 1e-9);

/// F_c = G_x - D(x) (xdot - f(x)).
Vec control_force(const Vec& x, const Vec& xdot, const LinearDS& plan, const DampingSpec& spec, const Vec& gravity_task);

/// S = 1/2 xdot^T H_x xdot + lambda_1 P(x). Throws NumericalError for non-SPD H_x.
double storage(const Vec& x, const Vec& xdot, const Mat& task_inertia, double lambda1, const LinearDS& plan);

struct PassivityRecord {
  double t = 0.0;
  double storage = 0.0;
  double storage_rate = 0.0;
  double power = 0.0;
  bool feasible = false;
  bool violation = false;
};

/// Append-only per-step storage/power log.
struct PassivityTrace {
  double relative_tolerance = 1e-3;  // tol = relative_tolerance * max(1, |power|)
  std::vector<PassivityRecord> records;
  std::size_t violations = 0;

  std::size_t feasible_steps() const;
  /// Fraction of all records whose rate satisfies Sdot <= power + tol.
  double satisfied_fraction() const;
  /// The same over feasible records only (1 when there are none).
  double feasible_satisfied_fraction() const;
  void write_csv(std::ostream& out) const;
};

/// Records one step: Sdot = (S_now - S_prev) / dt and power F_ext^T xdot. A
/// violation is counted only when `feasible` is set.
void passivity_step(PassivityTrace& trace, double t, double s_prev, double s_now, double dt, const Vec& f_ext,
                    const Vec& xdot, bool feasible);

}  // namespace pcbf
