#pragma once

#include <vector>

#include "cfmimo/netgen.hpp"
#include "cfmimo/types.hpp"

namespace cfmimo::rf {

/// MMSE scalar quantizer for the standard Gaussian: 2^B points, 2^B - 1
/// thresholds, antisymmetric about zero.
struct LloydCodebook {
  int bits = 0;
  VecD points;
  VecD thresholds;
  double normalized_mse = 0.0;
};

/// Fixed point of the Lloyd iteration on N(0,1). 1 <= bits <= 12.
LloydCodebook lloyd_max_codebook(int bits);

/// Quantization distortion factor rho: exact Lloyd-Max MSE for B <= 5,
/// (pi*sqrt(3)/2)*2^(-2B) for B >= 6, 0 for infinite resolution.
double distortion_factor(BitDepth B);

struct QuantizerModel {
  BitDepth B;
  double rho = 0.0;
  LloydCodebook codebook;  // empty when B infinite

  static QuantizerModel make(BitDepth B);
};

/// Quantize real and imaginary parts independently; the unit-variance
/// codebook is scaled by scale_i/sqrt(2) so each real dimension is
/// variance-matched. Pass-through when B is infinite.
VecC quantize_signal(const VecC& x, const QuantizerModel& model, const VecD& scale);

/// AQNM quantization-noise covariance: rho*(1-rho)*diag(C_in).
MatC aqnm_noise_cov(const MatC& C_in, double rho);

/// Statistical combiners, one N x R unit-modulus matrix per station.
struct CombinerSet {
  std::vector<MatC> W;
};

/// Indices of the `count` users nearest to station m (toroidal distance,
/// ties broken by lowest user index).
std::vector<int> nearest_users(const netgen::Topology& topo, int m, int count);

/// Top-R eigenvectors (descending eigenvalue) of a covariance sum;
/// semi-unitary, before the unit-modulus projection.
MatC statistical_eigenbeams(const MatC& covariance_sum, int R);

/// Alternate entrywise phase projection and semi-unitary (polar) projection;
/// returns the last unit-modulus iterate. Zero entries map to 1+0j.
MatC alternating_projection(const MatC& U, double tol = 1e-8, int max_iters = 100);

CombinerSet design_combiners(const netgen::ChannelStats& stats, const netgen::Topology& topo,
                             const SystemConfig& cfg);

}  // namespace cfmimo::rf
