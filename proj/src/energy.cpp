#include "cfmimo/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo::energy {

void PowerParams::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(std::string("PowerParams: ") + msg); };
  if (!(fom > 0)) fail("fom must be > 0");
  if (!(f_s > 0)) fail("f_s must be > 0");
  if (!(p_fh > 0)) fail("p_fh must be > 0");
  if (!(eta > 0)) fail("eta must be > 0");
  if (!(p_lo > 0) || !(p_lpf > 0) || !(p_m > 0) || !(p_ps > 0))
    fail("component powers must be > 0");
}

ComponentPowers component_powers(const PowerParams& params, BitDepth B) {
  if (B.is_infinite())
    throw std::invalid_argument("component_powers: infinite resolution has unbounded power");
  ComponentPowers cp;
  cp.p_adc = params.fom * params.f_s * std::pow(2.0, B.bits());
  cp.p_rf = 2.0 * params.p_lpf + 2.0 * params.p_m + params.p_ps;
  return cp;
}

double pa_power(const PowerParams& params, const SystemConfig& cfg, double expected_tx_power) {
  const double block = cfg.W_c * cfg.T_c;
  if (!(block > cfg.T)) throw std::invalid_argument("pa_power: W_c*T_c must exceed T");
  return (block - cfg.T) / block * expected_tx_power / params.eta;
}

double bs_power(const PowerParams& params, const SystemConfig& cfg, double pa) {
  const ComponentPowers cp = component_powers(params, cfg.B_d);
  return pa + params.p_lo + cfg.R * (2.0 * cp.p_adc + cp.p_rf);
}

double energy_efficiency(double min_rate_expectation, double total_bs_power,
                         const PowerParams& params, const SystemConfig& cfg, double C) {
  if (std::isinf(C))
    throw std::invalid_argument("energy_efficiency: infinite fronthaul capacity has unbounded power");
  const double block = cfg.W_c * cfg.T_c;
  const double prelog = (block - cfg.T) / block;
  const double denom = total_bs_power + cfg.M * cfg.W * C * params.p_fh;
  if (!(denom > 0)) throw std::invalid_argument("energy_efficiency: nonpositive power total");
  return prelog * cfg.W * min_rate_expectation / denom;
}

}  // namespace cfmimo::energy
