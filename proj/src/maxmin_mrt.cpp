#include "cfmimo/maxmin_mrt.hpp"

#include <cmath>
#include <stdexcept>

#include "cfmimo/socp.hpp"

namespace cfmimo::maxmin {

MrtCoefficients mrt_coefficients(const uplink::EffectiveChannel& eff, const VecD& sigma_d,
                                 double rho_d, const rf::CombinerSet& W) {
  const int M = eff.M, K = eff.K;
  const double omr = 1.0 - rho_d;

  MrtCoefficients cf;
  cf.M = M;
  cf.K = K;
  cf.a = MatD::Zero(M, K);
  cf.b.assign(M, MatC::Zero(K, K));
  cf.c.assign(M, MatD::Zero(K, K));
  cf.d = VecD::Zero(K);
  cf.e = MatD::Zero(M, K);
  cf.f = VecD::Zero(M);

  for (int m = 0; m < M; ++m) {
    const MatC& Wm = W.W[m];
    const double sig2 = sigma_d(m) * sigma_d(m);
    cf.f(m) = omr * Wm.squaredNorm() * sig2;
    for (int k = 0; k < K; ++k) {
      const VecC& gk = eff.g(m, k);
      cf.a(m, k) = omr * gk.squaredNorm();
      cf.d(k) += omr * (gk.squaredNorm() + eff.C(m, k).diagonal().real().sum()) * sig2;

      // e: per-station power coefficient of p_{m,k}.
      double diag_term = 0.0;
      for (Eigen::Index r = 0; r < gk.size(); ++r)
        diag_term += std::norm(gk(r)) * Wm.col(r).squaredNorm();
      cf.e(m, k) = omr * omr * (Wm * gk).squaredNorm() + rho_d * omr * diag_term;

      for (int i = 0; i < K; ++i) {
        const VecC& gi = eff.g(m, i);
        cf.b[m](i, k) = omr * (gk.adjoint() * gi)(0);
        const VecD outer_k = gk.cwiseAbs2().real() + eff.C(m, k).diagonal().real();
        cf.c[m](i, k) = omr * omr * (gi.adjoint() * eff.C(m, k) * gi)(0).real() +
                        rho_d * omr * outer_k.dot(gi.cwiseAbs2().real());
      }
    }
  }
  return cf;
}

namespace {

// Variable layout: x(m,k) at m*K + k, then y(i,k) for i != k.
struct Layout {
  int M, K, n;
  std::vector<int> pair_of;  // (i * K + k) -> y column, -1 on diagonal

  Layout(int M_, int K_) : M(M_), K(K_) {
    pair_of.assign(static_cast<size_t>(K) * K, -1);
    int idx = M * K;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < K; ++i)
        if (i != k) pair_of[static_cast<size_t>(i) * K + k] = idx++;
    n = idx;
  }
  int x(int m, int k) const { return m * K + k; }
  int y(int i, int k) const { return pair_of[static_cast<size_t>(i) * K + k]; }
};

void normalize_cone(socp::Cone& cone) {
  double w = std::abs(cone.beta);
  if (cone.A.size() > 0) w = std::max(w, cone.A.cwiseAbs().maxCoeff());
  if (cone.u0.size() > 0) w = std::max(w, cone.u0.cwiseAbs().maxCoeff());
  if (cone.b.size() > 0) w = std::max(w, cone.b.cwiseAbs().maxCoeff());
  if (!(w > 0)) return;
  cone.A /= w;
  cone.u0 /= w;
  cone.b /= w;
  cone.beta /= w;
}

double true_violation(const SocpWitness& wit, double t, const MrtCoefficients& cf,
                      double sigma2_d, double P_d) {
  const int M = cf.M, K = cf.K;
  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    double lhs2 = cf.d(k) + sigma2_d;
    double rhs = 0.0;
    for (int m = 0; m < M; ++m) {
      rhs += cf.a(m, k) * wit.x(m, k);
      for (int i = 0; i < K; ++i) lhs2 += cf.c[m](i, k) * wit.x(m, i) * wit.x(m, i);
    }
    for (int i = 0; i < K; ++i)
      if (i != k) lhs2 += wit.y(i, k) * wit.y(i, k);
    worst = std::max(worst, std::sqrt(lhs2) - rhs / std::sqrt(t));
  }
  for (int m = 0; m < M; ++m) {
    double pw = cf.f(m);
    for (int k = 0; k < K; ++k) pw += cf.e(m, k) * wit.x(m, k) * wit.x(m, k);
    worst = std::max(worst, pw - P_d);
  }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      cxd acc = 0.0;
      for (int m = 0; m < M; ++m) acc += cf.b[m](i, k) * wit.x(m, i);
      worst = std::max(worst, std::abs(acc) - wit.y(i, k));
    }
  worst = std::max(worst, -wit.x.minCoeff());
  return worst;
}

}  // namespace

SocpWitness BarrierSocpOracle::check(double t, const MrtCoefficients& cf, double sigma2_d,
                                     double P_d, const SocpWitness* warm) const {
  if (!(t > 0)) throw std::invalid_argument("socp_feasibility: t must be > 0");
  const int M = cf.M, K = cf.K;
  const Layout lay(M, K);

  SocpWitness wit;
  wit.x = MatD::Zero(M, K);
  wit.y = MatD::Zero(K, K);

  // Power constraint unsatisfiable regardless of t.
  for (int m = 0; m < M; ++m)
    if (cf.f(m) > P_d) {
      wit.status = Feasibility::Infeasible;
      wit.slack = cf.f(m) - P_d;
      return wit;
    }

  // Variable scaling so the solver works near unit magnitude.
  double e_mass = 0.0;
  for (int m = 0; m < M; ++m) e_mass = std::max(e_mass, cf.e.row(m).sum());
  const double x_scale = e_mass > 0 ? std::sqrt(P_d / e_mass) : 1.0;
  MatD y_scale = MatD::Ones(K, K);
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k) {
      double acc = 0.0;
      for (int m = 0; m < M; ++m) acc += std::abs(cf.b[m](i, k));
      if (acc * x_scale > 0) y_scale(i, k) = acc * x_scale;
    }

  socp::Problem prob;
  prob.n = lay.n;
  const double sqrt_t = std::sqrt(t);

  // SINR cones, one per user.
  for (int k = 0; k < K; ++k) {
    socp::Cone cone;
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < K; ++i) cone.cols.push_back(lay.x(m, i));
    for (int i = 0; i < K; ++i)
      if (i != k) cone.cols.push_back(lay.y(i, k));
    const int ns = static_cast<int>(cone.cols.size());

    int rows = 0;
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < K; ++i)
        if (cf.c[m](i, k) > 0) ++rows;
    rows += (K - 1) + 1;  // y entries and the constant row

    cone.A = MatD::Zero(rows, ns);
    cone.u0 = VecD::Zero(rows);
    int r = 0;
    for (int m = 0; m < M; ++m)
      for (int i = 0; i < K; ++i)
        if (cf.c[m](i, k) > 0) cone.A(r++, m * K + i) = std::sqrt(cf.c[m](i, k)) * x_scale;
    int yj = M * K;
    for (int i = 0; i < K; ++i)
      if (i != k) cone.A(r++, yj++) = y_scale(i, k);
    cone.u0(r++) = std::sqrt(cf.d(k) + sigma2_d);

    cone.b = VecD::Zero(ns);
    for (int m = 0; m < M; ++m) cone.b(m * K + k) = cf.a(m, k) * x_scale / sqrt_t;
    normalize_cone(cone);
    prob.cones.push_back(std::move(cone));
  }

  // Per-station power cones.
  for (int m = 0; m < M; ++m) {
    if (!(cf.e.row(m).maxCoeff() > 0)) continue;
    socp::Cone cone;
    for (int k = 0; k < K; ++k)
      if (cf.e(m, k) > 0) cone.cols.push_back(lay.x(m, k));
    const int rows = static_cast<int>(cone.cols.size());
    cone.A = MatD::Zero(rows, rows);
    int r = 0;
    for (int k = 0; k < K; ++k)
      if (cf.e(m, k) > 0) cone.A(r, r) = std::sqrt(cf.e(m, k)) * x_scale, ++r;
    cone.u0 = VecD::Zero(rows);
    cone.b = VecD::Zero(rows);
    cone.beta = std::sqrt(std::max(P_d - cf.f(m), 0.0));
    normalize_cone(cone);
    prob.cones.push_back(std::move(cone));
  }

  // Cross-interference modulus cones.
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      bool any = false;
      for (int m = 0; m < M; ++m) any = any || std::abs(cf.b[m](i, k)) > 0;
      if (!any) continue;
      socp::Cone cone;
      for (int m = 0; m < M; ++m) cone.cols.push_back(lay.x(m, i));
      cone.cols.push_back(lay.y(i, k));
      const int ns = static_cast<int>(cone.cols.size());
      cone.A = MatD::Zero(2, ns);
      for (int m = 0; m < M; ++m) {
        cone.A(0, m) = cf.b[m](i, k).real() * x_scale;
        cone.A(1, m) = cf.b[m](i, k).imag() * x_scale;
      }
      cone.u0 = VecD::Zero(2);
      cone.b = VecD::Zero(ns);
      cone.b(ns - 1) = y_scale(i, k);
      normalize_cone(cone);
      prob.cones.push_back(std::move(cone));
    }

  // Hard bounding ball keeps the phase-I objective bounded below.
  {
    socp::Cone cone;
    for (int j = 0; j < lay.n; ++j) cone.cols.push_back(j);
    cone.A = MatD::Identity(lay.n, lay.n);
    cone.u0 = VecD::Zero(lay.n);
    cone.b = VecD::Zero(lay.n);
    cone.beta = 1e6 * std::sqrt(static_cast<double>(lay.n));
    cone.slack_coeff = 0.0;
    prob.cones.push_back(std::move(cone));
  }
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) prob.nonneg.push_back(lay.x(m, k));

  // Strictly interior start: a warm witness from a nearby target when
  // available, otherwise half the power budget spread evenly.
  VecD z0 = VecD::Zero(lay.n);
  const bool use_warm = warm != nullptr && warm->x.rows() == M && warm->x.cols() == K &&
                        warm->x.allFinite();
  if (use_warm) {
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k)
        z0(lay.x(m, k)) = std::max(warm->x(m, k) / x_scale, 1e-8);
  } else {
    for (int m = 0; m < M; ++m) {
      const double mass = cf.e.row(m).sum();
      const double p0 = mass > 0 ? (P_d - cf.f(m)) / (2.0 * mass) : x_scale * x_scale;
      for (int k = 0; k < K; ++k)
        z0(lay.x(m, k)) = std::sqrt(std::max(p0, 1e-300)) / x_scale;
    }
  }
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      cxd acc = 0.0;
      for (int m = 0; m < M; ++m) acc += cf.b[m](i, k) * z0(lay.x(m, i)) * x_scale;
      z0(lay.y(i, k)) = std::abs(acc) / y_scale(i, k) + 0.5;
    }

  const socp::Solution sol = socp::minimize_slack(prob, z0);

  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) wit.x(m, k) = std::max(sol.z(lay.x(m, k)), 0.0) * x_scale;
  for (int i = 0; i < K; ++i)
    for (int k = 0; k < K; ++k)
      if (i != k) wit.y(i, k) = std::max(sol.z(lay.y(i, k)), 0.0) * y_scale(i, k);
  wit.slack = sol.slack;
  switch (sol.status) {
    case socp::SolveStatus::SlackNegative:
      wit.status = Feasibility::Feasible;
      break;
    case socp::SolveStatus::Converged:
      wit.status = sol.slack <= feasible_slack_ ? Feasibility::Feasible : Feasibility::Infeasible;
      break;
    case socp::SolveStatus::LowerBoundPositive:
      wit.status = Feasibility::Infeasible;
      break;
    case socp::SolveStatus::Stalled:
      wit.status = Feasibility::Indeterminate;
      break;
  }
  wit.max_violation = true_violation(wit, t, cf, sigma2_d, P_d);
  return wit;
}

BisectionResult bisection_power(const MrtCoefficients& coef, double sigma2_d, double P_d,
                                double t_min, double t_max, double eps, const SocpOracle& oracle,
                                int bracket_doublings) {
  if (!(t_max > t_min) || !(eps > 0))
    throw std::invalid_argument("bisection_power: invalid bracket or eps");
  BisectionResult res;
  auto warm = [&]() -> const SocpWitness* { return res.any_feasible ? &res.witness : nullptr; };

  SocpWitness hi = oracle.check(t_max, coef, sigma2_d, P_d);
  ++res.oracle_calls;
  for (int d = 0; d < bracket_doublings && hi.status == Feasibility::Feasible; ++d) {
    t_min = t_max;
    res.witness = hi;
    res.any_feasible = true;
    t_max *= 2.0;
    hi = oracle.check(t_max, coef, sigma2_d, P_d, warm());
    ++res.oracle_calls;
  }

  // Once a feasible level is bracketed, refine relative to it; before that
  // keep hunting downward, since the seed can sit orders of magnitude above
  // the optimum and a fixed eps would end the search too early.
  for (int iter = 0; iter < 200; ++iter) {
    if (res.any_feasible) {
      const double goal = t_min > 0 ? std::min(eps, 1e-3 * t_min) : eps;
      if (t_max - t_min <= goal) break;
    } else if (t_max - t_min <= 1e-14 * (1.0 + t_min)) {
      break;  // nothing feasible above t_min
    }
    // Log-scale descent while still hunting for any feasible level.
    const double t = res.any_feasible || t_min > 0 ? 0.5 * (t_min + t_max) : 0.1 * t_max;
    SocpWitness w = oracle.check(t, coef, sigma2_d, P_d, warm());
    ++res.oracle_calls;
    if (w.status == Feasibility::Feasible) {
      t_min = t;
      res.witness = std::move(w);
      res.any_feasible = true;
    } else {
      t_max = t;
    }
  }
  res.t_lo = t_min;
  if (!res.any_feasible) res.witness.status = Feasibility::Infeasible;
  return res;
}

VecD default_init_sigma_mrt(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                            double rho_d, double P_d, double C_d) {
  const VecD zero_sigma = VecD::Zero(eff.M);
  const MrtCoefficients cf = mrt_coefficients(eff, zero_sigma, rho_d, W);
  double e_mass = 0.0;
  for (int m = 0; m < eff.M; ++m) e_mass = std::max(e_mass, cf.e.row(m).sum());
  const double p0 = e_mass > 0 ? P_d / (2.0 * e_mass) : 1.0;

  const downlink::PrecoderState F = downlink::mrt_precoder(eff);
  VecD sigma(eff.M);
  const VecD uniform = VecD::Constant(eff.K, p0);
  for (int m = 0; m < eff.M; ++m) sigma(m) = downlink::solve_sigma_d(F.F[m], uniform, C_d);
  return sigma;
}

FairnessResult algorithm1(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                          double rho_d, double sigma2_d, double P_d, double C_d,
                          const VecD& init_sigma, const AoOptions& opts,
                          const SocpOracle* oracle) {
  const BarrierSocpOracle default_oracle;
  if (oracle == nullptr) oracle = &default_oracle;

  const int M = eff.M, K = eff.K;
  downlink::PrecoderState state = downlink::mrt_precoder(eff);
  state.sigma_d =
      init_sigma.size() > 0 ? init_sigma : default_init_sigma_mrt(eff, W, rho_d, P_d, C_d);
  state.powers_mrt = MatD::Zero(M, K);

  FairnessResult best;
  best.t_star = -kInf;
  FairnessResult out;
  out.status = "max_rounds";

  double t_prev = 0.0;
  for (int round = 0; round < opts.max_rounds; ++round) {
    const MrtCoefficients cf = mrt_coefficients(eff, state.sigma_d, rho_d, W);

    // Bracket top: after the first round the achieved level anchors it (the
    // doubling expansion recovers the rare genuine jump); round one uses the
    // interference-free upper bound (every x_{m,k} at its single-entry
    // full-power level, only the constant noise kept).
    double t_seed;
    if (t_prev > 0) {
      t_seed = 1.05 * t_prev;
    } else {
      t_seed = 0.0;
      for (int k = 0; k < K; ++k) {
        double amp = 0.0;
        for (int m = 0; m < M; ++m)
          if (cf.e(m, k) > 0)
            amp += cf.a(m, k) * std::sqrt(std::max(P_d - cf.f(m), 0.0) / cf.e(m, k));
        t_seed = std::max(t_seed, amp * amp / (cf.d(k) + sigma2_d));
      }
      if (!(t_seed > 0)) t_seed = 1.0;
    }

    const double t_floor = t_prev > 0 ? t_prev * (1.0 - 1e-6) : 0.0;
    const double eps = opts.bisect_eps_rel * (1.0 + t_seed);
    const BisectionResult bis = bisection_power(cf, sigma2_d, P_d, t_floor, t_seed, eps, *oracle,
                                                opts.bracket_doublings);
    if (bis.any_feasible)
      state.powers_mrt = bis.witness.x.cwiseProduct(bis.witness.x);

    // Codebook step: fill the fronthaul at the new powers.
    for (int m = 0; m < M; ++m)
      state.sigma_d(m) = downlink::solve_sigma_d(state.F[m], state.powers_mrt.row(m), C_d);

    // Projection back to the transmit power budget; joint (p, sigma^2)
    // scaling leaves the fronthaul load unchanged.
    for (int m = 0; m < M; ++m) {
      const double pw = downlink::transmit_power_pdm(state.F[m], state.powers_mrt.row(m),
                                                     state.sigma_d(m), W.W[m], rho_d);
      if (pw > P_d) {
        const double kappa = P_d / pw;
        state.powers_mrt.row(m) *= kappa;
        state.sigma_d(m) *= std::sqrt(kappa);
      }
    }

    const downlink::SinrReport rep = downlink::sinr_per_user(state, eff, rho_d, sigma2_d);
    const double t_now = rep.min_sinr();
    out.trace.push_back(t_now);
    if (t_now > best.t_star) {
      best.t_star = t_now;
      best.powers_mrt = state.powers_mrt;
      best.sigma_d = state.sigma_d;
    }
    if (round > 0 && std::abs(t_now - t_prev) <= opts.rel_tol * std::max(t_prev, 1e-300)) {
      out.status = "converged";
      t_prev = t_now;
      ++out.rounds;
      break;
    }
    t_prev = t_now;
    ++out.rounds;
  }

  out.t_star = best.t_star;
  out.powers_mrt = best.powers_mrt;
  out.sigma_d = best.sigma_d;
  for (size_t i = 1; i < out.trace.size(); ++i)
    if (out.trace[i] < out.trace[i - 1] - 1e-9) out.monotone = false;
  if (!out.monotone) out.status += "+nonmonotone";
  return out;
}

}  // namespace cfmimo::maxmin
