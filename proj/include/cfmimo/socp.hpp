#pragma once

#include <vector>

#include "cfmimo/types.hpp"

namespace cfmimo::socp {

/// One second-order cone ||A z_sup + u0|| <= b . z_sup + beta + slack_coeff*s
/// over the support columns `cols`; slack_coeff = 0 makes the cone hard.
struct Cone {
  std::vector<int> cols;
  MatD A;   // d x |cols|
  VecD u0;  // d
  VecD b;   // |cols|
  double beta = 0.0;
  double slack_coeff = 1.0;
};

struct Problem {
  int n = 0;  // variable count, excluding the slack
  std::vector<Cone> cones;
  std::vector<int> nonneg;  // hard z_i >= 0 indices
};

enum class SolveStatus {
  SlackNegative,       // found z with every soft cone strictly satisfied
  LowerBoundPositive,  // certified: optimal slack exceeds the infeasibility cut
  Converged,           // duality gap below tolerance, slack near optimum
  Stalled,             // Newton stalled before any certificate
};

struct Solution {
  VecD z;
  double slack = 0.0;
  double slack_lower = 0.0;  // slack - nu/t, lower bound on the optimum
  SolveStatus status = SolveStatus::Stalled;
  int newton_steps = 0;
};

struct SolveOptions {
  double feasible_exit = -1e-9;
  double infeasible_exit = 1e-7;
  double gap_tol = 1e-9;
  double t0 = 300.0;
  double mu = 5.0;
  int max_newton = 20000;
};

/// Phase-I: minimize the common slack s over the log-barrier central path.
/// z0 must strictly satisfy the hard cones and nonneg set; s is initialized
/// internally above every soft-cone residual.
Solution minimize_slack(const Problem& prob, const VecD& z0, const SolveOptions& opts = {});

}  // namespace cfmimo::socp
