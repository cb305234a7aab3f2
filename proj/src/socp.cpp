#include "cfmimo/socp.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::socp {

namespace {

struct ConeEval {
  VecD u;       // A z + u0
  double w;     // b.z + beta + slack*s
  double c;     // w^2 - ||u||^2
  bool interior() const { return w > 0.0 && c > 0.0; }
};

ConeEval eval_cone(const Cone& cone, const VecD& w_full, int n) {
  ConeEval ev;
  VecD zs(cone.cols.size());
  for (size_t j = 0; j < cone.cols.size(); ++j) zs(j) = w_full(cone.cols[j]);
  ev.u = cone.u0;
  if (cone.A.cols() > 0) ev.u += cone.A * zs;
  ev.w = cone.b.dot(zs) + cone.beta + cone.slack_coeff * w_full(n);
  ev.c = ev.w * ev.w - ev.u.squaredNorm();
  return ev;
}

// Barrier value; +inf outside the interior.
double barrier_value(const Problem& prob, const VecD& w_full, double t_barrier) {
  const int n = prob.n;
  double f = t_barrier * w_full(n);
  for (const Cone& cone : prob.cones) {
    ConeEval ev = eval_cone(cone, w_full, n);
    if (!ev.interior()) return kInf;
    f -= std::log(ev.c);
  }
  for (int i : prob.nonneg) {
    if (!(w_full(i) > 0.0)) return kInf;
    f -= std::log(w_full(i));
  }
  return f;
}

}  // namespace

Solution minimize_slack(const Problem& prob, const VecD& z0, const SolveOptions& opts) {
  const int n = prob.n;
  const int dim = n + 1;

  VecD w_full(dim);
  w_full.head(n) = z0;
  w_full(n) = 0.0;

  // Lift the slack until every soft cone is strictly inside.
  double s0 = 0.0;
  for (const Cone& cone : prob.cones) {
    if (cone.slack_coeff <= 0.0) continue;
    ConeEval ev = eval_cone(cone, w_full, n);
    s0 = std::max(s0, (ev.u.norm() - ev.w) / cone.slack_coeff);
  }
  w_full(n) = s0 + 1.0;

  for (const Cone& cone : prob.cones) {
    if (cone.slack_coeff > 0.0) continue;
    if (!eval_cone(cone, w_full, n).interior())
      throw std::invalid_argument("minimize_slack: z0 violates a hard cone");
  }
  for (int i : prob.nonneg)
    if (!(w_full(i) > 0.0))
      throw std::invalid_argument("minimize_slack: z0 violates the nonnegative set");

  const double nu = 2.0 * static_cast<double>(prob.cones.size()) +
                    static_cast<double>(prob.nonneg.size());

  // A^T A is constant per cone; precompute it once for the Hessian assembly.
  std::vector<MatD> gram(prob.cones.size());
  for (size_t j = 0; j < prob.cones.size(); ++j)
    if (prob.cones[j].A.cols() > 0)
      gram[j] = prob.cones[j].A.transpose() * prob.cones[j].A;

  Solution sol;
  sol.z = w_full.head(n);
  sol.slack = w_full(n);
  sol.slack_lower = -kInf;

  VecD grad(dim);
  MatD hess(dim, dim);

  double t_barrier = opts.t0;
  int steps = 0;
  while (true) {
    // Center at the current t_barrier.
    bool stalled = false;
    for (int it = 0; it < 200; ++it) {
      if (steps++ > opts.max_newton) {
        stalled = true;
        break;
      }
      grad.setZero();
      hess.setZero();
      grad(n) = t_barrier;

      for (size_t jc = 0; jc < prob.cones.size(); ++jc) {
        const Cone& cone = prob.cones[jc];
        const ConeEval ev = eval_cone(cone, w_full, n);
        const size_t ns = cone.cols.size();
        const bool soft = cone.slack_coeff > 0.0;
        const size_t next = ns + (soft ? 1 : 0);

        // grad_c and the structured pieces over the extended support.
        VecD gc(next);
        const VecD Atu = cone.A.cols() > 0 ? VecD(cone.A.transpose() * ev.u) : VecD::Zero(ns);
        for (size_t j = 0; j < ns; ++j) gc(j) = 2.0 * ev.w * cone.b(j) - 2.0 * Atu(j);
        if (soft) gc(ns) = 2.0 * ev.w * cone.slack_coeff;

        auto col_of = [&](size_t j) { return j < ns ? cone.cols[j] : n; };
        const double inv_c = 1.0 / ev.c;
        for (size_t j = 0; j < next; ++j) grad(col_of(j)) -= gc(j) * inv_c;

        // hess += (2 A^T A - 2 b b^T)/c + gc gc^T / c^2 over the support.
        MatD local = gc * gc.transpose() * (inv_c * inv_c);
        if (cone.A.cols() > 0) local.topLeftCorner(ns, ns) += 2.0 * inv_c * gram[jc];
        VecD bext(next);
        bext.head(ns) = cone.b;
        if (soft) bext(ns) = cone.slack_coeff;
        local -= 2.0 * inv_c * (bext * bext.transpose());
        for (size_t j = 0; j < next; ++j)
          for (size_t l = 0; l < next; ++l) hess(col_of(j), col_of(l)) += local(j, l);
      }
      for (int i : prob.nonneg) {
        grad(i) -= 1.0 / w_full(i);
        hess(i, i) += 1.0 / (w_full(i) * w_full(i));
      }
      hess.diagonal().array() += 1e-12;

      Eigen::LDLT<MatD> ldlt(hess);
      VecD dw = ldlt.solve(-grad);
      const double decrement2 = -grad.dot(dw);
      if (!(decrement2 > 0)) break;  // at (numerical) center
      if (decrement2 * 0.5 < 1e-8) break;

      // Backtracking line search keeping strict interiority.
      const double f0 = barrier_value(prob, w_full, t_barrier);
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-14) {
        VecD trial = w_full + alpha * dw;
        const double ft = barrier_value(prob, trial, t_barrier);
        if (ft <= f0 - 0.25 * alpha * decrement2) {
          w_full = std::move(trial);
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) {
        stalled = true;
        break;
      }

      if (w_full(n) < opts.feasible_exit) {
        sol.z = w_full.head(n);
        sol.slack = w_full(n);
        sol.slack_lower = -kInf;
        sol.status = SolveStatus::SlackNegative;
        sol.newton_steps = steps;
        return sol;
      }
    }

    sol.z = w_full.head(n);
    sol.slack = w_full(n);
    sol.slack_lower = w_full(n) - nu / t_barrier;
    sol.newton_steps = steps;

    if (sol.slack_lower > opts.infeasible_exit) {
      sol.status = SolveStatus::LowerBoundPositive;
      return sol;
    }
    if (nu / t_barrier <= opts.gap_tol) {
      sol.status = stalled ? SolveStatus::Stalled : SolveStatus::Converged;
      return sol;
    }
    if (stalled) {
      sol.status = SolveStatus::Stalled;
      return sol;
    }
    t_barrier *= opts.mu;
  }
}

}  // namespace cfmimo::socp
