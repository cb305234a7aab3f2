#pragma once

#include <string>
#include <vector>

#include "cfmimo/types.hpp"

namespace cfmimo::maxmin {

struct AoOptions {
  double rel_tol = 1e-3;        // relative min-SINR change terminating the AO loop
  int max_rounds = 50;
  double bisect_eps_rel = 1e-4;  // eps_abs = eps_rel * (1 + t_max)
  int bracket_doublings = 30;
  // Initialization ladder for the ZF codebook parameter, as multipliers of
  // the uniform half-budget power level. The AO converges to an init-
  // dependent fixed point when the fronthaul cap binds; the best of a few
  // starts is returned.
  std::vector<double> zf_init_ladder = {1.0, 0.25, 0.0625};
};

/// Outcome of one max-min fairness optimization.
struct FairnessResult {
  double t_star = 0.0;  // min-SINR re-evaluated on the returned state
  MatD powers_mrt;      // M x K (MRT)
  VecD powers_zf;       // K (ZF)
  VecD sigma_d;         // per station
  std::vector<double> trace;  // min-SINR per AO round
  std::string status;         // "converged", "max_rounds", ...
  int rounds = 0;
  bool monotone = true;  // whether the trace was non-decreasing
};

}  // namespace cfmimo::maxmin
