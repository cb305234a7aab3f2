#pragma once

#include <vector>

#include "cfmimo/netgen.hpp"
#include "cfmimo/rf.hpp"
#include "cfmimo/rng.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo::uplink {

/// Orthogonal training: first K columns of the size-T DFT matrix, scaled so
/// every column has squared norm T*P_u.
struct TrainingDesign {
  MatC X_u;  // T x K
};

TrainingDesign training_matrix(const SystemConfig& cfg);

/// Per-station observation statistics for the vectorized training phase.
struct ObservationModel {
  MatC Psi;  // RT x NK, conj(X_u) (x) W^H
  MatC C_y;  // RT x RT covariance of the quantized observation
  MatC C_q;  // RT x RT diagonal quantization-noise covariance
};

ObservationModel observation_model(const MatC& X_u, const MatC& W_m,
                                   const std::vector<MatC>& C_h_blocks, double sigma2_u,
                                   double rho_u);

/// Compression-noise level that fills the uplink fronthaul: the smallest
/// sigma with log2 det(I + C_y/sigma^2) = T*C_u. Zero when C_u is infinite.
double solve_sigma_u(const MatC& C_y, int T, double C_u);

/// Drop-level LMMSE operators and covariances; reused across coherence
/// blocks of one drop.
struct LmmseModel {
  MatC Psi;
  MatC C_y;
  double sigma_u = 0.0;
  MatC gain;                   // C_h_yhat * C_yhat^{-1}, NK x RT
  std::vector<MatC> C_hhat;    // per user, N x N
  std::vector<MatC> C_htilde;  // per user, N x N
};

LmmseModel lmmse_model(const MatC& Psi, const std::vector<MatC>& C_h_blocks, const MatC& C_y,
                       double sigma_u, double rho_u);

/// One station's channel estimate with estimate/error covariances.
struct UplinkEstimate {
  double sigma_u = 0.0;
  MatC C_y;
  VecC h_hat;                  // NK stacked estimate
  std::vector<MatC> C_hhat;    // per user
  std::vector<MatC> C_htilde;  // per user
};

VecC apply_lmmse(const LmmseModel& model, const VecC& y_hat);

UplinkEstimate lmmse_estimate(const VecC& y_hat, const MatC& Psi,
                              const std::vector<MatC>& C_h_blocks, const MatC& C_y,
                              double sigma_u, double rho_u);

/// Sample-path observation with Gaussianized quantization noise; validation
/// and per-block estimation mode. Draws (v, q, e) from the given streams.
VecC sample_observation(const MatC& X_u, const MatC& W_m, const VecC& h_m, double sigma2_u,
                        double rho_u, const MatC& C_q_diag, double sigma_u_compression,
                        RngStream& noise_rng, RngStream& quant_rng, RngStream& compress_rng);

/// Effective channels through the combiners: g_hat = W^H h_hat per link and
/// C_gtilde = W^H C_htilde W.
struct EffectiveChannel {
  int M = 0, K = 0, R = 0;
  std::vector<VecC> g_hat;     // m * K + k, R-dim
  std::vector<MatC> C_gtilde;  // m * K + k, R x R

  const VecC& g(int m, int k) const { return g_hat[static_cast<size_t>(m) * K + k]; }
  const MatC& C(int m, int k) const { return C_gtilde[static_cast<size_t>(m) * K + k]; }
};

EffectiveChannel effective_channel(const std::vector<UplinkEstimate>& estimates,
                                   const rf::CombinerSet& W, int N);

/// Analytic NMSE: sum_m tr(C_htilde_m) / sum_m tr(C_h_m).
double nmse(const netgen::ChannelStats& stats, const std::vector<UplinkEstimate>& estimates);

}  // namespace cfmimo::uplink
