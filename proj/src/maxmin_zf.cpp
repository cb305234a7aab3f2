#include "cfmimo/maxmin_zf.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::maxmin {

ZfSystem assemble_linear_system(const uplink::EffectiveChannel& eff,
                                const downlink::PrecoderState& state, const VecD& sigma_d,
                                double rho_d, double sigma2_d) {
  const int M = eff.M, K = eff.K;
  const double omr = 1.0 - rho_d;

  ZfSystem sys;
  sys.gain = omr * omr;
  sys.Mmat = MatD::Zero(K, K);
  sys.n = VecD::Constant(K, sigma2_d);

  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      const MatC& F = state.F[m];
      const VecC& g = eff.g(m, k);
      const MatC& Cg = eff.C(m, k);
      const VecD outer_diag = g.cwiseAbs2().real() + Cg.diagonal().real();
      sys.n(k) += omr * outer_diag.sum() * sigma_d(m) * sigma_d(m);
      for (int i = 0; i < K; ++i) {
        sys.Mmat(k, i) += omr * omr * (F.col(i).adjoint() * Cg * F.col(i))(0).real() +
                          rho_d * omr * outer_diag.dot(F.col(i).cwiseAbs2().real());
      }
    }
  }
  return sys;
}

ZfFeasibility zf_feasibility(double t, const ZfSystem& sys, const downlink::PrecoderState& state,
                             const rf::CombinerSet& W, const VecD& sigma_d, double P_d, double C_d,
                             double rho_d) {
  if (!(t > 0)) throw std::invalid_argument("zf_feasibility: t must be > 0");
  const int K = static_cast<int>(sys.n.size());
  const int M = static_cast<int>(state.F.size());

  ZfFeasibility res;
  const MatD A = sys.gain * MatD::Identity(K, K) - t * sys.Mmat;
  Eigen::PartialPivLU<MatD> lu(A);
  res.rcond = lu.rcond();
  if (!(res.rcond > 1e-12)) return res;  // near the SINR pole: infeasible at this t

  VecD P = lu.solve(t * sys.n);
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if (P.minCoeff() < -1e-12 * scale) return res;
  P = P.cwiseMax(0.0);

  for (int m = 0; m < M; ++m) {
    const double pw = downlink::transmit_power_pdm(state.F[m], P, sigma_d(m), W.W[m], rho_d);
    if (pw > P_d + 1e-9) return res;
    const double rate = downlink::fronthaul_rate_cdm(state.F[m], P, sigma_d(m));
    if (!(rate <= C_d + 1e-9)) return res;
  }
  res.feasible = true;
  res.P = std::move(P);
  return res;
}

ZfBisectionResult bisection_power_zf(const std::function<ZfFeasibility(double)>& feasibility,
                                     double t_min, double t_max, double eps,
                                     int bracket_doublings) {
  if (!(t_max > t_min) || !(eps > 0))
    throw std::invalid_argument("bisection_power_zf: invalid bracket or eps");
  ZfBisectionResult res;

  ZfFeasibility hi = feasibility(t_max);
  ++res.calls;
  for (int d = 0; d < bracket_doublings && hi.feasible; ++d) {
    t_min = t_max;
    res.P = hi.P;
    res.any_feasible = true;
    t_max *= 2.0;
    hi = feasibility(t_max);
    ++res.calls;
  }

  // Refine relative to the bracketed feasible level once one exists; until
  // then keep hunting downward past eps (the seed can overshoot by decades).
  for (int iter = 0; iter < 200; ++iter) {
    if (res.any_feasible) {
      const double goal = t_min > 0 ? std::min(eps, 1e-3 * t_min) : eps;
      if (t_max - t_min <= goal) break;
    } else if (t_max - t_min <= 1e-14 * (1.0 + t_min)) {
      break;  // nothing feasible above t_min
    }
    // Log-scale descent while still hunting for any feasible level.
    const double t = res.any_feasible || t_min > 0 ? 0.5 * (t_min + t_max) : 0.1 * t_max;
    ZfFeasibility f = feasibility(t);
    ++res.calls;
    if (f.feasible) {
      t_min = t;
      res.P = std::move(f.P);
      res.any_feasible = true;
    } else {
      t_max = t;
    }
  }
  res.t_lo = t_min;
  return res;
}

VecD default_init_sigma_zf(const downlink::PrecoderState& zf_state, const rf::CombinerSet& W,
                           double rho_d, double P_d, double C_d) {
  const int M = static_cast<int>(zf_state.F.size());
  const int K = static_cast<int>(zf_state.F.front().cols());

  // Uniform powers at half the tightest station budget.
  double mass = 0.0;
  for (int m = 0; m < M; ++m) {
    double station = 0.0;
    for (int k = 0; k < K; ++k) {
      VecD unit = VecD::Zero(K);
      unit(k) = 1.0;
      station += downlink::transmit_power_pdm(zf_state.F[m], unit, 0.0, W.W[m], rho_d);
    }
    mass = std::max(mass, station);
  }
  const double p0 = mass > 0 ? P_d / (2.0 * mass) : 1.0;

  VecD sigma(M);
  const VecD uniform = VecD::Constant(K, p0);
  for (int m = 0; m < M; ++m) sigma(m) = downlink::solve_sigma_d(zf_state.F[m], uniform, C_d);
  return sigma;
}

namespace {

FairnessResult algorithm2_single(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                                 double rho_d, double sigma2_d, double P_d, double C_d,
                                 const VecD& init_sigma, const AoOptions& opts) {
  const int M = eff.M, K = eff.K;
  downlink::PrecoderState state = downlink::zf_precoder(eff);
  state.sigma_d =
      init_sigma.size() > 0 ? init_sigma : default_init_sigma_zf(state, W, rho_d, P_d, C_d);
  state.powers_zf = VecD::Zero(K);

  FairnessResult out;
  out.status = "max_rounds";

  double t_prev = 0.0;
  for (int round = 0; round < opts.max_rounds; ++round) {
    const ZfSystem sys = assemble_linear_system(eff, state, state.sigma_d, rho_d, sigma2_d);
    auto oracle = [&](double t) {
      return zf_feasibility(t, sys, state, W, state.sigma_d, P_d, C_d, rho_d);
    };

    // Impairment-free waterline caps the bracket: per-station power budget
    // at the interference-free equality powers p_k = t n_k / gain.
    double t_wl = kInf;
    for (int m = 0; m < M; ++m) {
      const double base =
          downlink::transmit_power_pdm(state.F[m], VecD::Zero(K), state.sigma_d(m), W.W[m], rho_d);
      const double linear =
          downlink::transmit_power_pdm(state.F[m], sys.n / sys.gain, 0.0, W.W[m], rho_d);
      if (linear > 0) t_wl = std::min(t_wl, std::max(P_d - base, 0.0) / linear);
    }
    double t_seed = std::isfinite(t_wl) && t_wl > 0 ? 2.0 * t_wl : 1.0;
    t_seed = std::max(t_seed, 2.0 * t_prev);

    // The current iterate stays feasible, so seed the bracket floor with it.
    double t_floor = 0.0;
    VecD P_floor;
    if (t_prev > 0) {
      double cand = t_prev;
      for (int tries = 0; tries < 3 && t_floor == 0.0; ++tries) {
        const ZfFeasibility f = oracle(cand);
        if (f.feasible) {
          t_floor = cand;
          P_floor = f.P;
        } else {
          cand *= 1.0 - 1e-9;
        }
      }
    }

    const double eps = opts.bisect_eps_rel * (1.0 + t_seed);
    ZfBisectionResult bis =
        bisection_power_zf(oracle, t_floor, std::max(t_seed, t_floor * 2 + 1e-300), eps,
                           opts.bracket_doublings);
    if (bis.any_feasible)
      state.powers_zf = bis.P;
    else if (P_floor.size() > 0)
      state.powers_zf = P_floor;

    // Codebook step: equate the fronthaul load at the new powers.
    for (int m = 0; m < M; ++m)
      state.sigma_d(m) = downlink::solve_sigma_d(state.F[m], state.powers_zf, C_d);

    const downlink::SinrReport rep = downlink::sinr_per_user(state, eff, rho_d, sigma2_d);
    const double t_now = rep.min_sinr();
    out.trace.push_back(t_now);
    ++out.rounds;
    if (round > 0 && std::abs(t_now - t_prev) <= opts.rel_tol * std::max(t_prev, 1e-300)) {
      out.status = "converged";
      t_prev = t_now;
      break;
    }
    t_prev = t_now;
  }

  out.t_star = t_prev;
  out.powers_zf = state.powers_zf;
  out.sigma_d = state.sigma_d;
  for (size_t i = 1; i < out.trace.size(); ++i)
    if (out.trace[i] < out.trace[i - 1] - 1e-9) out.monotone = false;
  if (!out.monotone) out.status += "+nonmonotone";
  return out;
}

}  // namespace

FairnessResult algorithm2(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                          double rho_d, double sigma2_d, double P_d, double C_d,
                          const VecD& init_sigma, const AoOptions& opts) {
  if (init_sigma.size() > 0 || opts.zf_init_ladder.size() <= 1)
    return algorithm2_single(eff, W, rho_d, sigma2_d, P_d, C_d, init_sigma, opts);

  // The AO fixed point depends on where the fronthaul cap first binds; try a
  // ladder of codebook initializations and keep the best terminal state.
  const downlink::PrecoderState zf_state = downlink::zf_precoder(eff);
  const int K = eff.K;
  double mass = 0.0;
  for (int m = 0; m < eff.M; ++m) {
    double station = 0.0;
    for (int k = 0; k < K; ++k) {
      VecD unit = VecD::Zero(K);
      unit(k) = 1.0;
      station += downlink::transmit_power_pdm(zf_state.F[m], unit, 0.0, W.W[m], rho_d);
    }
    mass = std::max(mass, station);
  }
  const double p_base = mass > 0 ? P_d / (2.0 * mass) : 1.0;

  FairnessResult best;
  best.t_star = -kInf;
  for (double mult : opts.zf_init_ladder) {
    VecD sigma(eff.M);
    const VecD uniform = VecD::Constant(K, mult * p_base);
    for (int m = 0; m < eff.M; ++m)
      sigma(m) = downlink::solve_sigma_d(zf_state.F[m], uniform, C_d);
    FairnessResult res = algorithm2_single(eff, W, rho_d, sigma2_d, P_d, C_d, sigma, opts);
    if (res.t_star > best.t_star) best = std::move(res);
  }
  return best;
}

}  // namespace cfmimo::maxmin
