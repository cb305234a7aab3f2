#pragma once

#include <memory>
#include <vector>

#include "cfmimo/downlink.hpp"
#include "cfmimo/maxmin_common.hpp"
#include "cfmimo/rf.hpp"
#include "cfmimo/types.hpp"
#include "cfmimo/uplink.hpp"

namespace cfmimo::maxmin {

/// Scalarized MRT SINR/power coefficients. d and f are the only
/// sigma-dependent entries and are recomputed whenever sigma changes.
struct MrtCoefficients {
  int M = 0, K = 0;
  MatD a;                  // M x K, (1-rho)*||g_hat||^2
  std::vector<MatC> b;     // per m: K x K, b[m](i,k)
  std::vector<MatD> c;     // per m: K x K, c[m](i,k)
  VecD d;                  // K
  MatD e;                  // M x K
  VecD f;                  // M
};

MrtCoefficients mrt_coefficients(const uplink::EffectiveChannel& eff, const VecD& sigma_d,
                                 double rho_d, const rf::CombinerSet& W);

enum class Feasibility { Feasible, Infeasible, Indeterminate };

struct SocpWitness {
  MatD x;  // M x K, sqrt(powers)
  MatD y;  // K x K, y(i,k) for i != k; diagonal unused
  Feasibility status = Feasibility::Infeasible;
  double slack = 0.0;          // achieved phase-I slack (cone-normalized)
  double max_violation = 0.0;  // worst constraint residual in problem units
};

/// Feasibility oracle for the SINR-target cone program; swappable so an
/// external conic solver can stand in. `warm` optionally carries a witness
/// from a nearby target to start from.
class SocpOracle {
 public:
  virtual ~SocpOracle() = default;
  virtual SocpWitness check(double t, const MrtCoefficients& coef, double sigma2_d, double P_d,
                            const SocpWitness* warm = nullptr) const = 0;
};

/// Default oracle: phase-I slack minimization with a log-barrier interior
/// point method over the second-order cones. Feasible iff the optimal slack
/// is at most `feasible_slack`.
class BarrierSocpOracle : public SocpOracle {
 public:
  explicit BarrierSocpOracle(double feasible_slack = 1e-7) : feasible_slack_(feasible_slack) {}
  SocpWitness check(double t, const MrtCoefficients& coef, double sigma2_d, double P_d,
                    const SocpWitness* warm = nullptr) const override;

 private:
  double feasible_slack_;
};

struct BisectionResult {
  double t_lo = 0.0;
  SocpWitness witness;
  bool any_feasible = false;
  int oracle_calls = 0;
};

/// Largest bracketed feasible SINR target within eps; expands t_max by
/// doubling while it stays feasible.
BisectionResult bisection_power(const MrtCoefficients& coef, double sigma2_d, double P_d,
                                double t_min, double t_max, double eps, const SocpOracle& oracle,
                                int bracket_doublings = 30);

/// Alternating optimization for the MRT max-min problem: power bisection,
/// codebook solve, projection back to the feasible set. Returns the feasible
/// iterate with the highest re-evaluated min-SINR.
FairnessResult algorithm1(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                          double rho_d, double sigma2_d, double P_d, double C_d,
                          const VecD& init_sigma = VecD(), const AoOptions& opts = {},
                          const SocpOracle* oracle = nullptr);

/// Default sigma initialization: codebook solve at uniform powers using half
/// the power budget.
VecD default_init_sigma_mrt(const uplink::EffectiveChannel& eff, const rf::CombinerSet& W,
                            double rho_d, double P_d, double C_d);

}  // namespace cfmimo::maxmin
