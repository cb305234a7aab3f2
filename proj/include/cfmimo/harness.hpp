#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cfmimo/downlink.hpp"
#include "cfmimo/energy.hpp"
#include "cfmimo/netgen.hpp"
#include "cfmimo/rf.hpp"
#include "cfmimo/types.hpp"
#include "cfmimo/uplink.hpp"

namespace cfmimo::harness {

enum class ExperimentKind { NmseSweep, MaxminCdf, EeSweep, ValidateAqnm };
enum class PrecoderSelect { Mrt, Zf, Both };

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::MaxminCdf;
  std::vector<double> c_grid = {16.0};
  std::vector<BitDepth> b_grid = {BitDepth::finite(4)};
  int n_drops = 50;
  int n_blocks = 20;
  PrecoderSelect precoder = PrecoderSelect::Both;
  std::string out = "results.csv";
  int threads = 1;

  void validate() const;
};

struct LoadedConfig {
  SystemConfig sys;
  energy::PowerParams power;
  ExperimentSpec exp;
  std::uint64_t config_hash = 0;
};

/// Parse a config document (JSON; empty text means all defaults). Unknown
/// keys are rejected naming the key; invariant violations name the field.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::string& path);

struct ResultRow {
  int drop = 0;  // -1 on aggregated rows
  int block = 0;
  double C = 0.0;
  BitDepth B;
  std::string precoder;  // "mrt", "zf", or "-"
  std::string metric;    // nmse | min_sinr | min_rate | ee | p_bs_total
  double value = 0.0;
  std::string status = "ok";
  int iters = 0;
};

/// Long-term per-drop state shared by every grid cell and block.
struct DropState {
  netgen::Topology topo;
  netgen::PathSet paths;
  netgen::ChannelStats stats;
  rf::CombinerSet W;
};

DropState prepare_drop(const SystemConfig& sys, int drop);

/// Per-(C, B) estimation operators for one drop; C and B are applied
/// symmetrically to the uplink and downlink.
struct CellModel {
  SystemConfig sys;  // with B_u=B_d=B, C_u=C_d=C applied
  double rho_u = 0.0;
  double rho_d = 0.0;
  uplink::TrainingDesign training;
  std::vector<uplink::ObservationModel> obs;  // per station
  std::vector<double> sigma_u;                // per station
  std::vector<uplink::LmmseModel> lmmse;      // per station
  double nmse = 0.0;
};

CellModel prepare_cell(const SystemConfig& base, const DropState& drop, double C, BitDepth B);

/// Channel-estimation + precoder-optimization pipeline for one coherence
/// block; emits min_sinr and min_rate rows per selected precoder. The
/// optimized per-station transmit powers are appended to `tx_power_out`
/// (M entries per precoder, MRT first) when it is non-null.
std::vector<ResultRow> run_coherence_block(const CellModel& cell, const DropState& drop,
                                           int drop_id, int block_id, PrecoderSelect precoder,
                                           std::vector<double>* tx_power_out = nullptr);

/// Execute the configured experiment over the grid x drops x blocks cross
/// product; drops run in parallel with deterministic, thread-count
/// independent results.
std::vector<ResultRow> sweep(const LoadedConfig& cfg);

/// CSV with the fixed schema and full round-trip float precision.
std::string format_rows(const std::vector<ResultRow>& rows, std::uint64_t config_hash);
void emit_results(const std::vector<ResultRow>& rows, const std::string& path,
                  std::uint64_t config_hash);

/// Empirical quantizer-model statistics over n complex Gaussian samples.
struct AqnmStats {
  double max_diag_rel_err = 0.0;   // sample var(q) vs rho(1-rho) diag(C)
  double max_offdiag_err = 0.0;    // relative to the geometric diagonal mean
  double max_corr = 0.0;           // |corr(q_i, x_j)|
  double rho = 0.0;
};

AqnmStats aqnm_empirical_stats(BitDepth B, const MatC& C_in, std::uint64_t seed, int n_samples);

/// Self-check behind the validate-aqnm subcommand; returns 0 on pass.
int validate_aqnm(std::uint64_t seed, std::ostream& os);

}  // namespace cfmimo::harness
