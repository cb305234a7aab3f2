#pragma once

#include <vector>

#include "cfmimo/rf.hpp"
#include "cfmimo/types.hpp"
#include "cfmimo/uplink.hpp"

namespace cfmimo::downlink {

enum class PrecoderKind { Mrt, Zf };

/// Linear precoders with power coefficients and the downlink codebook
/// parameters. MRT carries per-(station, user) powers; ZF shares one power
/// per user across stations.
struct PrecoderState {
  PrecoderKind kind = PrecoderKind::Mrt;
  std::vector<MatC> F;  // per station, R x K
  MatD powers_mrt;      // M x K (MRT mode)
  VecD powers_zf;       // K (ZF mode)
  VecD sigma_d;         // per station

  double power(int m, int k) const {
    return kind == PrecoderKind::Mrt ? powers_mrt(m, k) : powers_zf(k);
  }
  VecD station_powers(int m) const {
    return kind == PrecoderKind::Mrt ? VecD(powers_mrt.row(m)) : powers_zf;
  }
};

/// MRT: precoder columns equal the effective channel estimates.
PrecoderState mrt_precoder(const uplink::EffectiveChannel& eff);

/// ZF: stacked precoder is the Moore-Penrose pseudoinverse of the stacked
/// K x MR estimate; throws on rank deficiency (condition > 1e12).
PrecoderState zf_precoder(const uplink::EffectiveChannel& eff);

/// Per-user SINR lower bound with the term breakdown.
struct SinrReport {
  VecD sinr;   // per user
  VecD rate;   // log2(1 + SINR)
  MatD terms;  // K x 4: T0 signal and T1..T3 noise variances

  double min_sinr() const { return sinr.minCoeff(); }
  double min_rate() const { return rate.minCoeff(); }
};

SinrReport sinr_per_user(const PrecoderState& state, const uplink::EffectiveChannel& eff,
                         double rho_d, double sigma2_d);

/// Expected transmit power of one station (W).
double transmit_power_pdm(const MatC& F_m, const VecD& powers, double sigma_d_m, const MatC& W_m,
                          double rho_d);

/// Fronthaul load of one station in bits/s/Hz; +inf when sigma is zero with
/// nonzero precoded power.
double fronthaul_rate_cdm(const MatC& F_m, const VecD& powers, double sigma_d_m);

/// Codebook parameter that fills the downlink fronthaul: fronthaul_rate_cdm
/// evaluated at the result equals C_d. Zero when C_d is infinite or the
/// precoded power is zero.
double solve_sigma_d(const MatC& F_m, const VecD& powers, double C_d);

}  // namespace cfmimo::downlink
