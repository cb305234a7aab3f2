#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfmimo {

using cxd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatD = Eigen::MatrixXd;
using VecD = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Converter resolution in bits: a finite positive integer or infinite.
class BitDepth {
 public:
  BitDepth() = default;

  static BitDepth finite(int bits) {
    if (bits < 1) throw std::invalid_argument("BitDepth: bits must be >= 1");
    BitDepth b;
    b.bits_ = bits;
    return b;
  }
  static BitDepth infinite() { return BitDepth{}; }

  bool is_infinite() const { return bits_ < 0; }
  int bits() const {
    if (is_infinite()) throw std::logic_error("BitDepth: infinite has no bit count");
    return bits_;
  }
  std::string str() const { return is_infinite() ? "inf" : std::to_string(bits_); }

  friend bool operator==(BitDepth a, BitDepth b) { return a.bits_ == b.bits_; }
  friend bool operator<(BitDepth a, BitDepth b) {
    // infinite sorts above every finite depth
    if (a.is_infinite()) return false;
    if (b.is_infinite()) return true;
    return a.bits_ < b.bits_;
  }

 private:
  int bits_ = -1;
};

/// All scalar system parameters. Defaults are the desk-scale setup; the
/// radio constants (powers, noise, bandwidths) follow the dense-urban
/// 30 GHz values.
struct SystemConfig {
  int M = 4;       // base stations
  int K = 8;       // single-antenna users
  int N_rows = 4;  // UPA rows
  int N_cols = 2;  // UPA columns
  int R = 2;       // RF chains per station
  int T = 8;       // training length in channel uses

  BitDepth B_u = BitDepth::finite(4);  // ADC bits
  BitDepth B_d = BitDepth::finite(4);  // DAC bits
  double C_u = 16.0;                   // uplink fronthaul capacity, bits/s/Hz
  double C_d = 16.0;                   // downlink fronthaul capacity, bits/s/Hz

  double P_u = 0.19952623149688797;  // 23 dBm, W
  double P_d = 1.9952623149688795;   // 33 dBm, W
  double sigma2_u = 1.5960799238401976e-12;  // W*N0*NF_u (NF 7 dB), W
  double sigma2_d = 3.1848573644279756e-12;  // W*N0*NF_d (NF 10 dB), W

  double W = 80e6;     // bandwidth, Hz
  double W_c = 180e3;  // coherence bandwidth, Hz
  double T_c = 10e-3;  // coherence time, s

  double area_side = 250.0;  // deployment square side, m
  std::uint64_t seed = 1;

  // Multipath model: L uniform in [L_min, L_max], per-path powers with an
  // exponential decay profile normalized to the log-distance pathloss gain.
  int L_min = 2;
  int L_max = 6;
  double path_decay = 1.0;
  double pl_d0 = 1.0;      // reference distance, m
  double pl_alpha = 3.2;   // pathloss exponent
  double pl0_db = 61.34;   // pathloss at d0, dB

  int N() const { return N_rows * N_cols; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

inline void SystemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("SystemConfig: " + msg); };
  if (M < 1) fail("M must be >= 1");
  if (K < 1) fail("K must be >= 1");
  if (N_rows < 1 || N_cols < 1) fail("N_rows and N_cols must be >= 1");
  if (R < 1 || R > N()) fail("R must be in [1, N]");
  if (T < K) fail("T must satisfy T >= K (orthogonal training)");
  if (K % M != 0) fail("M must divide K (K/M nearest-user combiner rule)");
  if (K > M * R) fail("K must satisfy K <= M*R (ZF mode)");
  if (!(P_u > 0) || !(P_d > 0)) fail("P_u and P_d must be strictly positive");
  if (!(sigma2_u > 0) || !(sigma2_d > 0)) fail("sigma2_u and sigma2_d must be strictly positive");
  if (!(C_u > 0)) fail("C_u must be strictly positive");
  if (!(C_d > 0)) fail("C_d must be strictly positive");
  if (!(W > 0) || !(W_c > 0) || !(T_c > 0)) fail("W, W_c, T_c must be strictly positive");
  if (!(W_c * T_c > T)) fail("W_c*T_c must exceed T (coherence block holds the training)");
  if (!(area_side > 0)) fail("area_side must be strictly positive");
  if (L_min < 1 || L_max < L_min) fail("path count range [L_min, L_max] invalid");
  if (!(pl_d0 > 0)) fail("pl_d0 must be strictly positive");
  if (static_cast<long>(R) * T > 4096) fail("R*T exceeds the 4096-dim observation cap");
}

}  // namespace cfmimo
