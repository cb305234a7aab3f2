#pragma once

#include <functional>

#include "cfmimo/downlink.hpp"
#include "cfmimo/maxmin_common.hpp"
#include "cfmimo/rf.hpp"
#include "cfmimo/types.hpp"
#include "cfmimo/uplink.hpp"

namespace cfmimo::maxmin {

/// ZF SINR as an affine system of the shared powers:
/// SINR_k(P) = gain * p_k / (sum_i Mmat(k,i) p_i + n(k)).
struct ZfSystem {
  MatD Mmat;      // K x K, nonnegative
  VecD n;         // K, sigma-dependent constants plus receiver noise
  double gain = 1.0;  // (1-rho_d)^2
};

ZfSystem assemble_linear_system(const uplink::EffectiveChannel& eff,
                                const downlink::PrecoderState& state, const VecD& sigma_d,
                                double rho_d, double sigma2_d);

struct ZfFeasibility {
  bool feasible = false;
  VecD P;            // equality solution (clamped at zero when feasible)
  double rcond = 0;  // reciprocal condition estimate of the solve
};

/// Equality-system feasibility test: solve (gain*I - t*Mmat) P = t*n and
/// check nonnegativity plus the per-station power and fronthaul caps.
ZfFeasibility zf_feasibility(double t, const ZfSystem& sys, const downlink::PrecoderState& state,
                             const rf::CombinerSet& W, const VecD& sigma_d, double P_d, double C_d,
                             double rho_d);

struct ZfBisectionResult {
  double t_lo = 0.0;
  VecD P;
  bool any_feasible = false;
  int calls = 0;
};

ZfBisectionResult bisection_power_zf(const std::function<ZfFeasibility(double)>& feasibility,
                                     double t_min, double t_max, double eps,
                                     int bracket_doublings = 30);

/// Alternating optimization for the ZF max-min problem; the min-SINR trace
/// is non-decreasing and the terminal state fills the fronthaul caps.
FairnessResult algorithm2(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                          double rho_d, double sigma2_d, double P_d, double C_d,
                          const VecD& init_sigma = VecD(), const AoOptions& opts = {});

VecD default_init_sigma_zf(const downlink::PrecoderState& zf_state, const rf::CombinerSet& W,
                           double rho_d, double P_d, double C_d);

}  // namespace cfmimo::maxmin
