#pragma once

#include "cfmimo/types.hpp"

namespace cfmimo::energy {

/// Converter/RF power-consumption parameters; defaults follow the reported
/// state-of-the-art hardware figures.
struct PowerParams {
  double fom = 1432.1e-15;  // J per conversion step
  double f_s = 1e9;         // sampling frequency, Hz
  double p_fh = 2e-9;       // fronthaul power, W per bit/s (2 W/Gbps)
  double eta = 0.46;        // power-added efficiency
  double p_lo = 22.5e-3;    // local oscillator, W
  double p_lpf = 14e-3;     // low-pass filter, W
  double p_m = 0.3e-3;      // mixer, W
  double p_ps = 3e-3;       // 90-degree phase shifter, W

  void validate() const;
};

struct ComponentPowers {
  double p_adc = 0.0;  // one B-bit converter, W
  double p_rf = 0.0;   // one RF chain (filters, mixers, phase shifter), W
};

/// P_ADC = FOM * F_s * 2^B and P_RF = 2 P_LPF + 2 P_M + P_PS.
/// Infinite B is rejected: energy accounting needs a physical converter.
ComponentPowers component_powers(const PowerParams& params, BitDepth B);

/// Power-amplifier draw: data-phase prelog times radiated power over PAE.
double pa_power(const PowerParams& params, const SystemConfig& cfg, double expected_tx_power);

/// P_BS = P_PA + P_LO + R (2 P_ADC + P_RF).
double bs_power(const PowerParams& params, const SystemConfig& cfg, double pa);

/// Minimum energy-efficiency lower bound in bits/J. `min_rate_expectation`
/// is E{min_k log2(1+SINR_k)} in bits/s/Hz; `total_bs_power` sums P_BS over
/// stations. C must be finite.
double energy_efficiency(double min_rate_expectation, double total_bs_power,
                         const PowerParams& params, const SystemConfig& cfg, double C);

}  // namespace cfmimo::energy
