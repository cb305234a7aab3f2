#include "cfmimo/downlink.hpp"

#include <cmath>
#include <stdexcept>

#include "cfmimo/logdet.hpp"

namespace cfmimo::downlink {

PrecoderState mrt_precoder(const uplink::EffectiveChannel& eff) {
  PrecoderState st;
  st.kind = PrecoderKind::Mrt;
  st.F.reserve(eff.M);
  for (int m = 0; m < eff.M; ++m) {
    MatC F(eff.R, eff.K);
    for (int k = 0; k < eff.K; ++k) F.col(k) = eff.g(m, k);
    st.F.push_back(std::move(F));
  }
  st.powers_mrt = MatD::Zero(eff.M, eff.K);
  st.sigma_d = VecD::Zero(eff.M);
  return st;
}

PrecoderState zf_precoder(const uplink::EffectiveChannel& eff) {
  const int MR = eff.M * eff.R;
  if (eff.K > MR) throw std::invalid_argument("zf_precoder: requires K <= M*R");

  // Stacked K x MR estimate with rows g_hat^H; precoder is its pseudoinverse.
  MatC G(eff.K, MR);
  for (int k = 0; k < eff.K; ++k)
    for (int m = 0; m < eff.M; ++m)
      G.block(k, m * eff.R, 1, eff.R) = eff.g(m, k).adjoint();

  Eigen::JacobiSVD<MatC> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecD sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(sv.size() - 1) < 1e-12 * sv(0) ||
      sv(0) / sv(sv.size() - 1) > 1e12)
    throw std::runtime_error("zf_precoder: stacked estimate is rank deficient");
  const MatC pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();

  PrecoderState st;
  st.kind = PrecoderKind::Zf;
  st.F.reserve(eff.M);
  for (int m = 0; m < eff.M; ++m) st.F.push_back(pinv.block(m * eff.R, 0, eff.R, eff.K));
  st.powers_zf = VecD::Zero(eff.K);
  st.sigma_d = VecD::Zero(eff.M);
  return st;
}

SinrReport sinr_per_user(const PrecoderState& state, const uplink::EffectiveChannel& eff,
                         double rho_d, double sigma2_d) {
  const int M = eff.M, K = eff.K;
  const double omr = 1.0 - rho_d;

  SinrReport rep;
  rep.sinr.resize(K);
  rep.rate.resize(K);
  rep.terms = MatD::Zero(K, 4);

  // diag(F P F^H) per station, shared across users.
  std::vector<VecD> fpf_diag(M);
  for (int m = 0; m < M; ++m) {
    const VecD p = state.station_powers(m);
    VecD d = VecD::Zero(eff.R);
    for (int i = 0; i < K; ++i) d += p(i) * state.F[m].col(i).cwiseAbs2().real();
    fpf_diag[m] = d;
  }

  const bool zf = state.kind == PrecoderKind::Zf;
  for (int k = 0; k < K; ++k) {
    cxd t0_sum = 0.0;
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (int m = 0; m < M; ++m) {
      const MatC& F = state.F[m];
      const VecC& g = eff.g(m, k);
      const MatC& Cg = eff.C(m, k);
      const double pk = state.power(m, k);

      if (!zf) t0_sum += omr * (g.adjoint() * F.col(k))(0) * std::sqrt(pk);
      t1 += omr * omr * (F.col(k).adjoint() * Cg * F.col(k))(0).real() * pk;

      // T3: tr((g g^H + C_gtilde)(rho*diag(FPF^H) + sigma_dm^2 I))
      const double sig2 = state.sigma_d(m) * state.sigma_d(m);
      const VecD outer_diag = g.cwiseAbs2().real() + Cg.diagonal().real();
      t3 += omr * (outer_diag.dot(rho_d * fpf_diag[m]) + sig2 * outer_diag.sum());
    }
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      cxd coh = 0.0;
      double incoh = 0.0;
      for (int m = 0; m < M; ++m) {
        const MatC& F = state.F[m];
        const double pi_ = state.power(m, i);
        // ZF nulls the coherent cross term by the delta property.
        if (!zf) coh += (eff.g(m, k).adjoint() * F.col(i))(0) * std::sqrt(pi_);
        incoh += (F.col(i).adjoint() * eff.C(m, k) * F.col(i))(0).real() * pi_;
      }
      t2 += omr * omr * (std::norm(coh) + incoh);
    }
    // ZF signal term collapses to (1-rho)^2 p_k.
    const double t0 = zf ? omr * omr * state.power(0, k) : std::norm(t0_sum);
    rep.terms(k, 0) = t0;
    rep.terms(k, 1) = t1;
    rep.terms(k, 2) = t2;
    rep.terms(k, 3) = t3;
    rep.sinr(k) = t0 / (t1 + t2 + t3 + sigma2_d);
    rep.rate(k) = std::log2(1.0 + rep.sinr(k));
  }
  return rep;
}

double transmit_power_pdm(const MatC& F_m, const VecD& powers, double sigma_d_m, const MatC& W_m,
                          double rho_d) {
  const double omr = 1.0 - rho_d;
  const MatC WF = W_m * F_m;
  double coherent = 0.0;
  for (Eigen::Index k = 0; k < powers.size(); ++k)
    coherent += powers(k) * WF.col(k).squaredNorm();

  // tr(W diag(F P F^H) W^H) = sum_r diag(FPF^H)_r * ||W col r||^2
  VecD fpf_diag = VecD::Zero(F_m.rows());
  for (Eigen::Index k = 0; k < powers.size(); ++k)
    fpf_diag += powers(k) * F_m.col(k).cwiseAbs2().real();
  double diag_part = 0.0;
  for (Eigen::Index r = 0; r < F_m.rows(); ++r)
    diag_part += fpf_diag(r) * W_m.col(r).squaredNorm();

  const double ww_trace = W_m.squaredNorm();
  return omr * omr * coherent + rho_d * omr * diag_part +
         omr * ww_trace * sigma_d_m * sigma_d_m;
}

namespace {
MatC precoded_gram(const MatC& F_m, const VecD& powers) {
  MatC A = MatC::Zero(F_m.rows(), F_m.rows());
  for (Eigen::Index k = 0; k < powers.size(); ++k)
    A.noalias() += powers(k) * (F_m.col(k) * F_m.col(k).adjoint());
  return 0.5 * (A + A.adjoint());
}
}  // namespace

double fronthaul_rate_cdm(const MatC& F_m, const VecD& powers, double sigma_d_m) {
  const MatC A = precoded_gram(F_m, powers);
  const VecD lam = logdet::psd_eigenvalues(A);
  if (!(lam.maxCoeff() > 0)) return 0.0;
  if (!(sigma_d_m > 0)) return kInf;
  return logdet::capacity_bits(lam, sigma_d_m * sigma_d_m);
}

double solve_sigma_d(const MatC& F_m, const VecD& powers, double C_d) {
  if (std::isinf(C_d)) return 0.0;
  if (!(C_d > 0)) throw std::invalid_argument("solve_sigma_d: C_d must be > 0");
  return logdet::solve_noise_level(precoded_gram(F_m, powers), C_d);
}

}  // namespace cfmimo::downlink
