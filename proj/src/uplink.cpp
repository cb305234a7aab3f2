#include "cfmimo/uplink.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cfmimo/logdet.hpp"

namespace cfmimo::uplink {

namespace {
constexpr double kPi = std::numbers::pi;

MatC block_diag(const std::vector<MatC>& blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  MatC out = MatC::Zero(total, total);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

MatC kron(const MatC& A, const MatC& B) {
  MatC out(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}
}  // namespace

TrainingDesign training_matrix(const SystemConfig& cfg) {
  if (cfg.T < cfg.K) throw std::invalid_argument("training_matrix: T must satisfy T >= K");
  TrainingDesign td;
  td.X_u.resize(cfg.T, cfg.K);
  const double amp = std::sqrt(cfg.P_u);
  for (int t = 0; t < cfg.T; ++t)
    for (int k = 0; k < cfg.K; ++k)
      td.X_u(t, k) = amp * std::polar(1.0, -2.0 * kPi * t * k / cfg.T);
  return td;
}

ObservationModel observation_model(const MatC& X_u, const MatC& W_m,
                                   const std::vector<MatC>& C_h_blocks, double sigma2_u,
                                   double rho_u) {
  ObservationModel om;
  om.Psi = kron(X_u.conjugate(), W_m.adjoint());
  const MatC C_h = block_diag(C_h_blocks);
  const int T = static_cast<int>(X_u.rows());
  const MatC noise_gram = kron(MatC::Identity(T, T), W_m.adjoint() * W_m);
  // Pre-quantization covariance of the combined observation.
  MatC S = om.Psi * C_h * om.Psi.adjoint() + sigma2_u * noise_gram;
  S = 0.5 * (S + S.adjoint());
  const double scale = (1.0 - rho_u);
  om.C_q = rf::aqnm_noise_cov(S, rho_u);
  om.C_y = scale * scale * S + om.C_q;
  om.C_y = 0.5 * (om.C_y + om.C_y.adjoint());
  return om;
}

double solve_sigma_u(const MatC& C_y, int T, double C_u) {
  if (std::isinf(C_u)) return 0.0;
  if (!(T * C_u > 0)) throw std::invalid_argument("solve_sigma_u: T*C_u must be > 0");
  return logdet::solve_noise_level(C_y, T * C_u);
}

LmmseModel lmmse_model(const MatC& Psi, const std::vector<MatC>& C_h_blocks, const MatC& C_y,
                       double sigma_u, double rho_u) {
  LmmseModel model;
  model.Psi = Psi;
  model.C_y = C_y;
  model.sigma_u = sigma_u;

  const MatC C_h = block_diag(C_h_blocks);
  const MatC C_hy = (1.0 - rho_u) * C_h * Psi.adjoint();
  MatC C_yhat = C_y;
  C_yhat.diagonal().array() += sigma_u * sigma_u;

  Eigen::LDLT<MatC> ldlt(C_yhat);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("lmmse_model: observation covariance is singular");
  model.gain = ldlt.solve(C_hy.adjoint()).adjoint();

  MatC C_hhat_full = model.gain * C_hy.adjoint();
  C_hhat_full = 0.5 * (C_hhat_full + C_hhat_full.adjoint());
  const MatC C_htilde_full = C_h - C_hhat_full;

  const int K = static_cast<int>(C_h_blocks.size());
  const int N = static_cast<int>(C_h_blocks.front().rows());
  model.C_hhat.reserve(K);
  model.C_htilde.reserve(K);
  for (int k = 0; k < K; ++k) {
    model.C_hhat.push_back(C_hhat_full.block(k * N, k * N, N, N));
    model.C_htilde.push_back(netgen::clamp_psd(C_htilde_full.block(k * N, k * N, N, N)));
  }
  return model;
}

VecC apply_lmmse(const LmmseModel& model, const VecC& y_hat) { return model.gain * y_hat; }

UplinkEstimate lmmse_estimate(const VecC& y_hat, const MatC& Psi,
                              const std::vector<MatC>& C_h_blocks, const MatC& C_y,
                              double sigma_u, double rho_u) {
  LmmseModel model = lmmse_model(Psi, C_h_blocks, C_y, sigma_u, rho_u);
  UplinkEstimate est;
  est.sigma_u = sigma_u;
  est.C_y = C_y;
  est.h_hat = apply_lmmse(model, y_hat);
  est.C_hhat = std::move(model.C_hhat);
  est.C_htilde = std::move(model.C_htilde);
  return est;
}

VecC sample_observation(const MatC& X_u, const MatC& W_m, const VecC& h_m, double sigma2_u,
                        double rho_u, const MatC& C_q_diag, double sigma_u_compression,
                        RngStream& noise_rng, RngStream& quant_rng, RngStream& compress_rng) {
  const int N = static_cast<int>(W_m.rows());
  const int R = static_cast<int>(W_m.cols());
  const int T = static_cast<int>(X_u.rows());
  const int K = static_cast<int>(X_u.cols());

  // Noiseless combined signal W^H H X^H, vectorized.
  MatC H(N, K);
  for (int k = 0; k < K; ++k) H.col(k) = h_m.segment(static_cast<Eigen::Index>(k) * N, N);
  MatC N_u(N, T);
  const double noise_std = std::sqrt(sigma2_u);
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) N_u(i, t) = noise_std * noise_rng.cnormal();
  const MatC Y = W_m.adjoint() * (H * X_u.adjoint() + N_u);

  VecC y(static_cast<Eigen::Index>(R) * T);
  for (int t = 0; t < T; ++t) y.segment(static_cast<Eigen::Index>(t) * R, R) = Y.col(t);

  // AQNM linearization with Gaussianized quantization noise, then the
  // fronthaul compression noise.
  VecC out = (1.0 - rho_u) * y;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double qvar = C_q_diag(i, i).real();
    out(i) += std::sqrt(std::max(qvar, 0.0)) * quant_rng.cnormal();
    out(i) += sigma_u_compression * compress_rng.cnormal();
  }
  return out;
}

EffectiveChannel effective_channel(const std::vector<UplinkEstimate>& estimates,
                                   const rf::CombinerSet& W, int N) {
  EffectiveChannel eff;
  eff.M = static_cast<int>(estimates.size());
  eff.K = static_cast<int>(estimates.front().C_htilde.size());
  eff.R = static_cast<int>(W.W.front().cols());
  eff.g_hat.resize(static_cast<size_t>(eff.M) * eff.K);
  eff.C_gtilde.resize(static_cast<size_t>(eff.M) * eff.K);
  for (int m = 0; m < eff.M; ++m) {
    const MatC& Wm = W.W[m];
    for (int k = 0; k < eff.K; ++k) {
      const VecC h_hat_k = estimates[m].h_hat.segment(static_cast<Eigen::Index>(k) * N, N);
      eff.g_hat[static_cast<size_t>(m) * eff.K + k] = Wm.adjoint() * h_hat_k;
      MatC C = Wm.adjoint() * estimates[m].C_htilde[k] * Wm;
      eff.C_gtilde[static_cast<size_t>(m) * eff.K + k] = 0.5 * (C + C.adjoint());
    }
  }
  return eff;
}

double nmse(const netgen::ChannelStats& stats, const std::vector<UplinkEstimate>& estimates) {
  double num = 0.0, den = 0.0;
  for (int m = 0; m < stats.M; ++m) {
    for (int k = 0; k < stats.K; ++k) {
      num += estimates[m].C_htilde[k].real().trace();
      den += stats.at(m, k).real().trace();
    }
  }
  if (!(den > 0)) throw std::invalid_argument("nmse: zero channel energy");
  return num / den;
}

}  // namespace cfmimo::uplink
