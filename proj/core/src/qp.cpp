#include "pcbf/qp.hpp"

#include <algorithm>
#include <cmath>

namespace pcbf {

namespace {

struct IpmResult {
  bool converged = false;
  Vec z, s, mu;
  int iterations = 0;
};

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Largest alpha in (0, 1] keeping v + alpha dv >= 0.
double max_step(const Vec& v, const Vec& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

class NormalSolver {
 public:
  void factor(const Mat& k) {
    llt_.compute(k);
    use_ldlt_ = llt_.info() != Eigen::Success;
    if (use_ldlt_) {
      Mat reg = k;
      reg.diagonal().array() += 1e-12 * (1.0 + k.diagonal().cwiseAbs().maxCoeff());
      ldlt_.compute(reg);
    }
  }
  Vec solve(const Vec& rhs) const { return use_ldlt_ ? Vec(ldlt_.solve(rhs)) : Vec(llt_.solve(rhs)); }

 private:
  Eigen::LLT<Mat> llt_;
  Eigen::LDLT<Mat> ldlt_;
  bool use_ldlt_ = false;
};

IpmResult ipm(const Mat& Q, const Vec& c, const Mat& A, const Vec& l, double tol, int max_iter) {
  const Eigen::Index m = Q.rows();
  const Eigen::Index p = A.rows();
  IpmResult r;
  NormalSolver solver;
  solver.factor(Q + 1e-14 * Mat::Identity(m, m));
  r.z = solver.solve(-c);
  if (!r.z.allFinite()) r.z = Vec::Zero(m);
  r.s = (A * r.z - l).cwiseMax(1.0);
  r.mu = Vec::Ones(p);

  // The iterate with the smallest merit is returned when the iteration stalls.
  IpmResult best = r;
  double best_merit = INFINITY;
  const double scale_p = 1.0 + inf_norm(l);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    const Vec qz = Q * r.z;
    const Vec atmu = A.transpose() * r.mu;
    const Vec rd = qz + c - atmu;
    const Vec rp = A * r.z - r.s - l;
    const double nu = r.s.dot(r.mu) / static_cast<double>(p);
    if (!rd.allFinite() || !rp.allFinite() || !std::isfinite(nu))
      throw NumericalError("solve_qp: non-finite iterate at iteration " + std::to_string(r.iterations));
    const double scale_d = 1.0 + std::max({inf_norm(c), inf_norm(qz), inf_norm(atmu)});
    const double merit = std::max({inf_norm(rd) / scale_d, inf_norm(rp) / scale_p, nu});
    if (merit < best_merit) {
      best_merit = merit;
      best = r;
    }
    if (merit <= tol) {
      r.converged = true;
      return r;
    }
    if (inf_norm(r.z) > 1e12 || inf_norm(r.mu) > 1e14) break;

    const Vec w = r.mu.cwiseQuotient(r.s);
    solver.factor(Q + A.transpose() * w.asDiagonal() * A);
    auto direction = [&](const Vec& rc, Vec& dz, Vec& ds, Vec& dmu) {
      dz = solver.solve(-rd - A.transpose() * (rc + r.mu.cwiseProduct(rp)).cwiseQuotient(r.s));
      ds = A * dz + rp;
      dmu = (-rc - r.mu.cwiseProduct(ds)).cwiseQuotient(r.s);
    };

    Vec dz, ds, dmu;
    direction(r.s.cwiseProduct(r.mu), dz, ds, dmu);
    const double a_aff = std::min(max_step(r.s, ds), max_step(r.mu, dmu));
    const double nu_aff = (r.s + a_aff * ds).dot(r.mu + a_aff * dmu) / static_cast<double>(p);
    const double sigma = std::pow(nu_aff / nu, 3.0);

    const Vec rc = r.s.cwiseProduct(r.mu) + ds.cwiseProduct(dmu) - Vec::Constant(p, sigma * nu);
    direction(rc, dz, ds, dmu);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(r.s, ds), max_step(r.mu, dmu)));
    r.z += alpha * dz;
    r.s += alpha * ds;
    r.mu += alpha * dmu;
    r.s = r.s.cwiseMax(1e-300);
    r.mu = r.mu.cwiseMax(1e-300);
  }
  best.iterations = r.iterations;
  return best;
}

// Equality-constrained solve with the rows in `active` held at their bounds.
bool polish(const Mat& Q, const Vec& c, const Mat& A, const Vec& l, const std::vector<Eigen::Index>& active, Vec& z,
            Vec& mu) {
  const Eigen::Index m = Q.rows();
  const auto k = static_cast<Eigen::Index>(active.size());
  Mat kkt = Mat::Zero(m + k, m + k);
  Vec rhs(m + k);
  kkt.topLeftCorner(m, m) = Q;
  rhs.head(m) = -c;
  for (Eigen::Index i = 0; i < k; ++i) {
    kkt.block(m + i, 0, 1, m) = A.row(active[static_cast<std::size_t>(i)]);
    kkt.block(0, m + i, m, 1) = -A.row(active[static_cast<std::size_t>(i)]).transpose();
    rhs[m + i] = l[active[static_cast<std::size_t>(i)]];
  }
  Eigen::FullPivLU<Mat> lu(kkt);
  if (!lu.isInvertible()) return false;
  Vec sol = lu.solve(rhs);
  for (int i = 0; i < 2; ++i) sol += lu.solve(rhs - kkt * sol);
  if (!sol.allFinite()) return false;
  z = sol.head(m);
  mu = Vec::Zero(A.rows());
  for (Eigen::Index i = 0; i < k; ++i) mu[active[static_cast<std::size_t>(i)]] = sol[m + i];
  return true;
}

// Primal-dual active-set correction starting from the interior-point guess:
// add the most violated row or drop the most negative multiplier until the
// equality solve is a KKT point. Rows are assumed normalized.
bool refine_active_set(const Mat& Q, const Vec& c, const Mat& A, const Vec& l, std::vector<Eigen::Index> active,
                       Vec& z, Vec& mu) {
  const Eigen::Index p = A.rows();
  const int max_changes = static_cast<int>(std::max<Eigen::Index>(10, 2 * p));
  for (int it = 0; it <= max_changes; ++it) {
    if (!polish(Q, c, A, l, active, z, mu)) return false;
    const Vec slack = A * z - l;
    Eigen::Index worst_row = -1;
    double worst_slack = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      const double tol = 1e-10 * (1.0 + std::abs(l[i]));
      if (slack[i] < -tol && slack[i] < worst_slack) {
        worst_slack = slack[i];
        worst_row = i;
      }
    }
    const double mu_tol = 1e-12 * (1.0 + inf_norm(mu));
    Eigen::Index worst_mu = -1;
    for (std::size_t j = 0; j < active.size(); ++j)
      if (mu[active[j]] < -mu_tol && (worst_mu < 0 || mu[active[j]] < mu[active[static_cast<std::size_t>(worst_mu)]]))
        worst_mu = static_cast<Eigen::Index>(j);
    if (worst_row < 0 && worst_mu < 0) {
      mu = mu.cwiseMax(0.0);
      return true;
    }
    if (worst_mu >= 0) active.erase(active.begin() + worst_mu);
    else active.push_back(worst_row);
  }
  return false;
}

}  // namespace

void DenseQP::validate() const {
  const Eigen::Index m = Q.rows();
  require(Q.cols() == m && c.size() == m, "DenseQP: objective dimensions mismatch");
  require(A.cols() == m || A.rows() == 0, "DenseQP: constraint matrix column count mismatch");
  require(A.rows() == l.size(), "DenseQP: constraint bound size mismatch");
  require(Q.allFinite() && c.allFinite() && A.allFinite() && l.allFinite(), "DenseQP: non-finite data");
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + Q.cwiseAbs().maxCoeff()),
          "DenseQP: Q is not symmetric");
}

std::string to_string(QPStatus status) {
  switch (status) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::Infeasible: return "infeasible";
    case QPStatus::MaxIterations: return "max_iter";
  }
  return "?";
}

double KktResiduals::max() const { return std::max({stationarity, primal, dual, complementarity}); }

KktResiduals kkt_residual(const DenseQP& qp, const Vec& z, const Vec& multipliers) {
  require(z.size() == qp.variables() && multipliers.size() == qp.rows(), "kkt_residual: size mismatch");
  KktResiduals r;
  const Vec slack = qp.rows() ? Vec(qp.A * z - qp.l) : Vec();
  Vec grad = qp.Q * z + qp.c;
  if (qp.rows()) grad -= qp.A.transpose() * multipliers;
  r.stationarity = grad.norm();
  if (qp.rows()) {
    r.primal = slack.cwiseMin(0.0).norm();
    r.dual = multipliers.cwiseMin(0.0).norm();
    r.complementarity = std::abs(multipliers.dot(slack));
  }
  return r;
}

QPSolution solve_qp(const DenseQP& qp, const QPSettings& settings) {
  qp.validate();
  require(settings.tolerance > 0.0 && settings.max_iterations > 0, "solve_qp: invalid settings");
  const Eigen::Index m = qp.variables();
  const Eigen::Index p = qp.rows();
  QPSolution sol;

  // Normalize rows and the objective; drop rows with zero normal.
  const double obj_scale = std::max({1.0, qp.Q.cwiseAbs().maxCoeff(), inf_norm(qp.c)});
  std::vector<Eigen::Index> kept;
  Vec norms(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    norms[i] = qp.A.row(i).norm();
    if (norms[i] > 0.0) {
      kept.push_back(i);
    } else if (qp.l[i] > 0.0) {
      sol.status = QPStatus::Infeasible;
      sol.infeasibility = qp.l[i];
      sol.z = Vec::Zero(m);
      sol.multipliers = Vec::Zero(p);
      sol.kkt = kkt_residual(qp, sol.z, sol.multipliers);
      return sol;
    }
  }
  const auto k = static_cast<Eigen::Index>(kept.size());
  const Mat Q = qp.Q / obj_scale;
  const Vec c = qp.c / obj_scale;
  Mat A(k, m);
  Vec l(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index row = kept[static_cast<std::size_t>(i)];
    A.row(i) = qp.A.row(row) / norms[row];
    l[i] = qp.l[row] / norms[row];
  }

  auto unscale = [&](const Vec& mu_scaled) {
    Vec mu = Vec::Zero(p);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index row = kept[static_cast<std::size_t>(i)];
      mu[row] = mu_scaled[i] * obj_scale / norms[row];
    }
    return mu;
  };

  if (k == 0) {
    NormalSolver solver;
    solver.factor(Q);
    sol.z = solver.solve(-c);
    if (!sol.z.allFinite()) throw NumericalError("solve_qp: unconstrained solve failed (Q singular?)");
    sol.multipliers = Vec::Zero(p);
    sol.kkt = kkt_residual(qp, sol.z, sol.multipliers);
    sol.status = QPStatus::Optimal;
    return sol;
  }

  const IpmResult r = ipm(Q, c, A, l, settings.tolerance, settings.max_iterations);
  sol.iterations = r.iterations;
  sol.z = r.z;
  sol.multipliers = unscale(r.mu);
  sol.kkt = kkt_residual(qp, sol.z, sol.multipliers);
  if (r.converged) sol.status = QPStatus::Optimal;

  if (settings.polish) {
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < k; ++i)
      if (r.mu[i] > r.s[i]) active.push_back(i);
    Vec z, mu;
    if (refine_active_set(Q, c, A, l, active, z, mu)) {
      const Vec mu_full = unscale(mu);
      const KktResiduals kkt = kkt_residual(qp, z, mu_full);
      const double kkt_tol = 1e-9 * (1.0 + inf_norm(qp.c) + inf_norm(qp.l));
      if (kkt.max() <= sol.kkt.max() || kkt.max() <= kkt_tol) {
        sol.z = z;
        sol.multipliers = mu_full;
        sol.kkt = kkt;
        sol.polished = true;
        sol.status = QPStatus::Optimal;
      }
    }
  }

  if (sol.status != QPStatus::Optimal) {
    // Phase one: min 1/2 t^2 + eps/2 |z|^2  s.t.  A z + t >= l, t >= 0.
    Mat q1 = Mat::Identity(m + 1, m + 1) * 1e-12;
    q1(m, m) = 1.0;
    Mat a1 = Mat::Zero(k + 1, m + 1);
    a1.topLeftCorner(k, m) = A;
    a1.col(m).head(k).setOnes();
    a1(k, m) = 1.0;
    Vec l1(k + 1);
    l1.head(k) = l;
    l1[k] = 0.0;
    const IpmResult ph = ipm(q1, Vec::Zero(m + 1), a1, l1, 1e-12, 200);
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i <= k; ++i)
      if (ph.mu[i] > ph.s[i]) active.push_back(i);
    Vec z1, mu1;
    sol.infeasibility = refine_active_set(q1, Vec::Zero(m + 1), a1, l1, active, z1, mu1) ? z1[m] : ph.z[m];
    sol.status = sol.infeasibility > settings.infeasibility_tolerance ? QPStatus::Infeasible : QPStatus::MaxIterations;
  }
  for (Eigen::Index i = 0; i < p; ++i)
    if (sol.multipliers[i] > settings.active_tolerance) sol.active_set.push_back(static_cast<int>(i));
  return sol;
}

}  // namespace pcbf
