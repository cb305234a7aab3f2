#include "cfmimo/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

#include "cfmimo/maxmin_mrt.hpp"
#include "cfmimo/maxmin_zf.hpp"

namespace cfmimo::harness {

using nlohmann::json;

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

double read_capacity(const json& v, const std::string& key) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return kInf;
    throw std::invalid_argument("config: " + key + " must be a number or \"inf\"");
  }
  if (!v.is_number()) throw std::invalid_argument("config: " + key + " must be a number or \"inf\"");
  return v.get<double>();
}

BitDepth read_bits(const json& v, const std::string& key) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return BitDepth::infinite();
    throw std::invalid_argument("config: " + key + " must be an integer or \"inf\"");
  }
  if (!v.is_number_integer())
    throw std::invalid_argument("config: " + key + " must be an integer or \"inf\"");
  return BitDepth::finite(v.get<int>());
}

void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& section) {
  for (const auto& [key, _] : obj.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("config: unknown key '" + key + "' in " + section);
}

}  // namespace

void ExperimentSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("ExperimentSpec: " + m); };
  if (c_grid.empty()) fail("c_grid must be non-empty");
  if (b_grid.empty()) fail("b_grid must be non-empty");
  if (n_drops < 1) fail("n_drops must be >= 1");
  if (n_blocks < 1) fail("n_blocks must be >= 1");
  if (threads < 1) fail("threads must be >= 1");
  for (double c : c_grid)
    if (!(c > 0)) fail("c_grid entries must be strictly positive");
  if (kind == ExperimentKind::EeSweep) {
    for (double c : c_grid)
      if (std::isinf(c)) fail("ee-sweep rejects infinite C (unbounded fronthaul power)");
    for (BitDepth b : b_grid)
      if (b.is_infinite()) fail("ee-sweep rejects infinite B (unbounded converter power)");
  }
}

LoadedConfig parse_config(const std::string& text) {
  json root = json::object();
  const bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (!blank) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(root, {"system", "power", "experiment"}, "top level");

  LoadedConfig out;

  if (root.contains("system")) {
    const json& s = root["system"];
    reject_unknown(s,
                   {"M", "K", "N_rows", "N_cols", "R", "T", "B_u", "B_d", "C_u", "C_d", "P_u",
                    "P_d", "sigma2_u", "sigma2_d", "W", "W_c", "T_c", "area_side", "seed", "L_min",
                    "L_max", "path_decay", "pl_d0", "pl_alpha", "pl0_db"},
                   "system");
    auto geti = [&](const char* k, int& dst) { if (s.contains(k)) dst = s.at(k).get<int>(); };
    auto getd = [&](const char* k, double& dst) { if (s.contains(k)) dst = s.at(k).get<double>(); };
    geti("M", out.sys.M);
    geti("K", out.sys.K);
    geti("N_rows", out.sys.N_rows);
    geti("N_cols", out.sys.N_cols);
    geti("R", out.sys.R);
    geti("T", out.sys.T);
    if (s.contains("B_u")) out.sys.B_u = read_bits(s.at("B_u"), "B_u");
    if (s.contains("B_d")) out.sys.B_d = read_bits(s.at("B_d"), "B_d");
    if (s.contains("C_u")) out.sys.C_u = read_capacity(s.at("C_u"), "C_u");
    if (s.contains("C_d")) out.sys.C_d = read_capacity(s.at("C_d"), "C_d");
    getd("P_u", out.sys.P_u);
    getd("P_d", out.sys.P_d);
    getd("sigma2_u", out.sys.sigma2_u);
    getd("sigma2_d", out.sys.sigma2_d);
    getd("W", out.sys.W);
    getd("W_c", out.sys.W_c);
    getd("T_c", out.sys.T_c);
    getd("area_side", out.sys.area_side);
    if (s.contains("seed")) out.sys.seed = s.at("seed").get<std::uint64_t>();
    geti("L_min", out.sys.L_min);
    geti("L_max", out.sys.L_max);
    getd("path_decay", out.sys.path_decay);
    getd("pl_d0", out.sys.pl_d0);
    getd("pl_alpha", out.sys.pl_alpha);
    getd("pl0_db", out.sys.pl0_db);
  }

  if (root.contains("power")) {
    const json& p = root["power"];
    reject_unknown(p, {"fom", "f_s", "p_fh", "eta", "p_lo", "p_lpf", "p_m", "p_ps"}, "power");
    auto getd = [&](const char* k, double& dst) { if (p.contains(k)) dst = p.at(k).get<double>(); };
    getd("fom", out.power.fom);
    getd("f_s", out.power.f_s);
    getd("p_fh", out.power.p_fh);
    getd("eta", out.power.eta);
    getd("p_lo", out.power.p_lo);
    getd("p_lpf", out.power.p_lpf);
    getd("p_m", out.power.p_m);
    getd("p_ps", out.power.p_ps);
  }

  if (root.contains("experiment")) {
    const json& e = root["experiment"];
    reject_unknown(e, {"kind", "c_grid", "b_grid", "n_drops", "n_blocks", "precoder", "out",
                       "threads"},
                   "experiment");
    if (e.contains("kind")) {
      const std::string k = e.at("kind").get<std::string>();
      if (k == "nmse-sweep") out.exp.kind = ExperimentKind::NmseSweep;
      else if (k == "maxmin-cdf") out.exp.kind = ExperimentKind::MaxminCdf;
      else if (k == "ee-sweep") out.exp.kind = ExperimentKind::EeSweep;
      else if (k == "validate-aqnm") out.exp.kind = ExperimentKind::ValidateAqnm;
      else throw std::invalid_argument("config: unknown experiment kind '" + k + "'");
    }
    if (e.contains("c_grid")) {
      out.exp.c_grid.clear();
      for (const json& v : e.at("c_grid")) out.exp.c_grid.push_back(read_capacity(v, "c_grid"));
    }
    if (e.contains("b_grid")) {
      out.exp.b_grid.clear();
      for (const json& v : e.at("b_grid")) out.exp.b_grid.push_back(read_bits(v, "b_grid"));
    }
    if (e.contains("n_drops")) out.exp.n_drops = e.at("n_drops").get<int>();
    if (e.contains("n_blocks")) out.exp.n_blocks = e.at("n_blocks").get<int>();
    if (e.contains("precoder")) {
      const std::string p = e.at("precoder").get<std::string>();
      if (p == "mrt") out.exp.precoder = PrecoderSelect::Mrt;
      else if (p == "zf") out.exp.precoder = PrecoderSelect::Zf;
      else if (p == "both") out.exp.precoder = PrecoderSelect::Both;
      else throw std::invalid_argument("config: precoder must be mrt, zf, or both");
    }
    if (e.contains("out")) out.exp.out = e.at("out").get<std::string>();
    if (e.contains("threads")) out.exp.threads = e.at("threads").get<int>();
  }

  out.sys.validate();
  out.power.validate();
  out.exp.validate();
  out.config_hash = fnv1a64(root.dump());
  return out;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

DropState prepare_drop(const SystemConfig& sys, int drop) {
  DropState st;
  RngStream topo_rng = RngStream::child(sys.seed, drop, 0, RngStage::Topology);
  st.topo = netgen::drop_topology(sys, topo_rng);
  RngStream path_rng = RngStream::child(sys.seed, drop, 0, RngStage::Paths);
  st.paths = netgen::sample_paths(sys, st.topo, path_rng);
  st.stats = netgen::channel_covariance(sys, st.paths);
  st.W = rf::design_combiners(st.stats, st.topo, sys);
  return st;
}

CellModel prepare_cell(const SystemConfig& base, const DropState& drop, double C, BitDepth B) {
  CellModel cell;
  cell.sys = base;
  cell.sys.B_u = B;
  cell.sys.B_d = B;
  cell.sys.C_u = C;
  cell.sys.C_d = C;
  cell.rho_u = rf::distortion_factor(B);
  cell.rho_d = cell.rho_u;
  cell.training = uplink::training_matrix(cell.sys);

  double err_trace = 0.0, tot_trace = 0.0;
  for (int m = 0; m < cell.sys.M; ++m) {
    std::vector<MatC> blocks(cell.sys.K);
    for (int k = 0; k < cell.sys.K; ++k) {
      blocks[k] = drop.stats.at(m, k);
      tot_trace += blocks[k].real().trace();
    }
    cell.obs.push_back(uplink::observation_model(cell.training.X_u, drop.W.W[m], blocks,
                                                 cell.sys.sigma2_u, cell.rho_u));
    cell.sigma_u.push_back(uplink::solve_sigma_u(cell.obs[m].C_y, cell.sys.T, cell.sys.C_u));
    cell.lmmse.push_back(uplink::lmmse_model(cell.obs[m].Psi, blocks, cell.obs[m].C_y,
                                             cell.sigma_u[m], cell.rho_u));
    for (int k = 0; k < cell.sys.K; ++k) err_trace += cell.lmmse[m].C_htilde[k].real().trace();
  }
  cell.nmse = err_trace / tot_trace;
  return cell;
}

namespace {

uplink::EffectiveChannel estimate_block(const CellModel& cell, const DropState& drop, int drop_id,
                                        int block_id) {
  const SystemConfig& sys = cell.sys;
  RngStream channel_rng = RngStream::child(sys.seed, drop_id, block_id, RngStage::Channel);
  const netgen::ChannelDraw draw = netgen::sample_channel(sys, drop.paths, channel_rng);

  RngStream noise_rng = RngStream::child(sys.seed, drop_id, block_id, RngStage::UplinkNoise);
  RngStream quant_rng = RngStream::child(sys.seed, drop_id, block_id, RngStage::QuantNoise);
  RngStream compress_rng =
      RngStream::child(sys.seed, drop_id, block_id, RngStage::CompressionNoise);

  std::vector<uplink::UplinkEstimate> estimates(sys.M);
  for (int m = 0; m < sys.M; ++m) {
    VecC h_m(static_cast<Eigen::Index>(sys.N()) * sys.K);
    for (int k = 0; k < sys.K; ++k)
      h_m.segment(static_cast<Eigen::Index>(k) * sys.N(), sys.N()) = draw.at(m, k);
    const VecC y_hat = uplink::sample_observation(cell.training.X_u, drop.W.W[m], h_m,
                                                  sys.sigma2_u, cell.rho_u, cell.obs[m].C_q,
                                                  cell.sigma_u[m], noise_rng, quant_rng,
                                                  compress_rng);
    estimates[m].sigma_u = cell.sigma_u[m];
    estimates[m].h_hat = uplink::apply_lmmse(cell.lmmse[m], y_hat);
    estimates[m].C_hhat = cell.lmmse[m].C_hhat;
    estimates[m].C_htilde = cell.lmmse[m].C_htilde;
  }
  return uplink::effective_channel(estimates, drop.W, sys.N());
}

}  // namespace

std::vector<ResultRow> run_coherence_block(const CellModel& cell, const DropState& drop,
                                           int drop_id, int block_id, PrecoderSelect precoder,
                                           std::vector<double>* tx_power_out) {
  const SystemConfig& sys = cell.sys;
  std::vector<ResultRow> rows;
  const uplink::EffectiveChannel eff = estimate_block(cell, drop, drop_id, block_id);

  ResultRow base;
  base.drop = drop_id;
  base.block = block_id;
  base.C = sys.C_d;
  base.B = sys.B_d;

  auto run_one = [&](downlink::PrecoderKind kind) {
    ResultRow r = base;
    r.precoder = kind == downlink::PrecoderKind::Mrt ? "mrt" : "zf";
    try {
      maxmin::FairnessResult res;
      downlink::PrecoderState state;
      if (kind == downlink::PrecoderKind::Mrt) {
        res = maxmin::algorithm1(eff, drop.W, cell.rho_d, sys.sigma2_d, sys.P_d, sys.C_d);
        state = downlink::mrt_precoder(eff);
        state.powers_mrt = res.powers_mrt;
      } else {
        res = maxmin::algorithm2(eff, drop.W, cell.rho_d, sys.sigma2_d, sys.P_d, sys.C_d);
        state = downlink::zf_precoder(eff);
        state.powers_zf = res.powers_zf;
      }
      state.sigma_d = res.sigma_d;

      r.status = sanitize(res.status);
      r.iters = res.rounds;
      r.metric = "min_sinr";
      r.value = res.t_star;
      rows.push_back(r);
      r.metric = "min_rate";
      r.value = std::log2(1.0 + res.t_star);
      rows.push_back(r);

      if (tx_power_out != nullptr)
        for (int m = 0; m < sys.M; ++m)
          tx_power_out->push_back(downlink::transmit_power_pdm(
              state.F[m], state.station_powers(m), state.sigma_d(m), drop.W.W[m], cell.rho_d));
    } catch (const std::exception& e) {
      r.status = sanitize(std::string("error:precoder: ") + e.what());
      r.metric = "min_sinr";
      r.value = std::nan("");
      rows.push_back(r);
      r.metric = "min_rate";
      rows.push_back(r);
      if (tx_power_out != nullptr)
        for (int m = 0; m < sys.M; ++m) tx_power_out->push_back(std::nan(""));
    }
  };

  if (precoder == PrecoderSelect::Mrt || precoder == PrecoderSelect::Both)
    run_one(downlink::PrecoderKind::Mrt);
  if (precoder == PrecoderSelect::Zf || precoder == PrecoderSelect::Both)
    run_one(downlink::PrecoderKind::Zf);
  return rows;
}

namespace {

struct EeAcc {
  double rate_sum = 0.0;
  VecD power_sum;
  long n = 0;
};

struct DropOutput {
  std::vector<ResultRow> rows;
  std::vector<std::array<EeAcc, 2>> acc;  // [grid][0=mrt, 1=zf]
};

DropOutput run_drop(const LoadedConfig& cfg, int drop_id) {
  const ExperimentSpec& exp = cfg.exp;
  DropOutput out;
  const size_t n_cells = exp.c_grid.size() * exp.b_grid.size();
  out.acc.resize(n_cells);
  for (auto& a : out.acc)
    for (auto& s : a) s.power_sum = VecD::Zero(cfg.sys.M);

  DropState drop;
  try {
    drop = prepare_drop(cfg.sys, drop_id);
  } catch (const std::exception& e) {
    ResultRow r;
    r.drop = drop_id;
    r.block = -1;
    r.precoder = "-";
    r.metric = exp.kind == ExperimentKind::NmseSweep ? "nmse" : "min_rate";
    r.value = std::nan("");
    r.status = sanitize(std::string("error:netgen: ") + e.what());
    out.rows.push_back(r);
    return out;
  }

  std::vector<CellModel> cells;
  std::vector<std::string> cell_errors(n_cells);
  size_t gi = 0;
  for (double C : exp.c_grid) {
    for (BitDepth B : exp.b_grid) {
      try {
        cells.push_back(prepare_cell(cfg.sys, drop, C, B));
      } catch (const std::exception& e) {
        cells.emplace_back();
        cell_errors[gi] = std::string("error:estimation: ") + e.what();
      }
      ++gi;
    }
  }

  auto cell_params = [&](size_t g) {
    const size_t nb = exp.b_grid.size();
    return std::pair<double, BitDepth>(exp.c_grid[g / nb], exp.b_grid[g % nb]);
  };

  if (exp.kind == ExperimentKind::NmseSweep) {
    for (size_t g = 0; g < n_cells; ++g) {
      ResultRow r;
      r.drop = drop_id;
      r.block = 0;
      std::tie(r.C, r.B) = cell_params(g);
      r.precoder = "-";
      r.metric = "nmse";
      if (cell_errors[g].empty()) {
        r.value = cells[g].nmse;
      } else {
        r.value = std::nan("");
        r.status = sanitize(cell_errors[g]);
      }
      out.rows.push_back(r);
    }
    return out;
  }

  const bool want_mrt =
      exp.precoder == PrecoderSelect::Mrt || exp.precoder == PrecoderSelect::Both;
  const bool want_zf = exp.precoder == PrecoderSelect::Zf || exp.precoder == PrecoderSelect::Both;

  for (int block = 0; block < exp.n_blocks; ++block) {
    for (size_t g = 0; g < n_cells; ++g) {
      if (!cell_errors[g].empty()) {
        ResultRow r;
        r.drop = drop_id;
        r.block = block;
        std::tie(r.C, r.B) = cell_params(g);
        r.precoder = "-";
        r.metric = "min_rate";
        r.value = std::nan("");
        r.status = sanitize(cell_errors[g]);
        out.rows.push_back(r);
        continue;
      }
      std::vector<double> tx;
      std::vector<ResultRow> rows =
          run_coherence_block(cells[g], drop, drop_id, block, exp.precoder, &tx);

      if (exp.kind == ExperimentKind::EeSweep) {
        // Fold the block into the per-cell accumulators instead of per-row
        // output; tx holds M per-station powers per executed precoder.
        size_t off = 0;
        auto fold = [&](int slot, const std::string& name) {
          double rate = std::nan("");
          for (const ResultRow& r : rows)
            if (r.precoder == name && r.metric == "min_rate") rate = r.value;
          bool ok = std::isfinite(rate);
          for (int m = 0; m < cfg.sys.M && ok; ++m) ok = std::isfinite(tx[off + m]);
          if (ok) {
            out.acc[g][slot].rate_sum += rate;
            for (int m = 0; m < cfg.sys.M; ++m) out.acc[g][slot].power_sum(m) += tx[off + m];
            out.acc[g][slot].n += 1;
          }
          off += cfg.sys.M;
        };
        if (want_mrt) fold(0, "mrt");
        if (want_zf) fold(1, "zf");
      } else {
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
      }
    }
  }
  return out;
}

}  // namespace

std::vector<ResultRow> sweep(const LoadedConfig& cfg) {
  cfg.exp.validate();
  if (cfg.exp.kind == ExperimentKind::ValidateAqnm)
    throw std::invalid_argument("sweep: validate-aqnm is a self-check, not a sweep");

  const int n_drops = cfg.exp.n_drops;
  std::vector<DropOutput> outputs(n_drops);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int d = next.fetch_add(1);
      if (d >= n_drops) break;
      outputs[d] = run_drop(cfg, d);
    }
  };
  const int n_threads = std::max(1, std::min(cfg.exp.threads, n_drops));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<ResultRow> rows;
  for (const DropOutput& o : outputs) rows.insert(rows.end(), o.rows.begin(), o.rows.end());

  if (cfg.exp.kind == ExperimentKind::EeSweep) {
    const size_t n_cells = cfg.exp.c_grid.size() * cfg.exp.b_grid.size();
    const size_t nb = cfg.exp.b_grid.size();
    const bool want_mrt =
        cfg.exp.precoder == PrecoderSelect::Mrt || cfg.exp.precoder == PrecoderSelect::Both;
    const bool want_zf =
        cfg.exp.precoder == PrecoderSelect::Zf || cfg.exp.precoder == PrecoderSelect::Both;
    for (size_t g = 0; g < n_cells; ++g) {
      for (int slot = 0; slot < 2; ++slot) {
        if ((slot == 0 && !want_mrt) || (slot == 1 && !want_zf)) continue;
        EeAcc total;
        total.power_sum = VecD::Zero(cfg.sys.M);
        for (const DropOutput& o : outputs) {
          total.rate_sum += o.acc[g][slot].rate_sum;
          total.power_sum += o.acc[g][slot].power_sum;
          total.n += o.acc[g][slot].n;
        }
        ResultRow r;
        r.drop = -1;
        r.block = -1;
        r.C = cfg.exp.c_grid[g / nb];
        r.B = cfg.exp.b_grid[g % nb];
        r.precoder = slot == 0 ? "mrt" : "zf";
        r.iters = static_cast<int>(total.n);
        if (total.n == 0) {
          r.metric = "ee";
          r.value = std::nan("");
          r.status = "error:ee: no successful blocks";
          rows.push_back(r);
          continue;
        }
        SystemConfig sys_cell = cfg.sys;
        sys_cell.B_u = sys_cell.B_d = r.B;
        sys_cell.C_u = sys_cell.C_d = r.C;
        double p_bs_total = 0.0;
        for (int m = 0; m < cfg.sys.M; ++m) {
          const double pa =
              energy::pa_power(cfg.power, sys_cell, total.power_sum(m) / total.n);
          p_bs_total += energy::bs_power(cfg.power, sys_cell, pa);
        }
        r.metric = "ee";
        r.value = energy::energy_efficiency(total.rate_sum / total.n, p_bs_total, cfg.power,
                                            sys_cell, r.C);
        rows.push_back(r);
        r.metric = "p_bs_total";
        r.value = p_bs_total;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::string format_rows(const std::vector<ResultRow>& rows, std::uint64_t config_hash) {
  std::string out = "drop,block,C,B,precoder,metric,value,status,iters,config_hash\n";
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash));
  for (const ResultRow& r : rows) {
    out += std::to_string(r.drop);
    out += ',';
    out += std::to_string(r.block);
    out += ',';
    out += fmt_double(r.C);
    out += ',';
    out += r.B.str();
    out += ',';
    out += r.precoder;
    out += ',';
    out += r.metric;
    out += ',';
    out += fmt_double(r.value);
    out += ',';
    out += sanitize(r.status);
    out += ',';
    out += std::to_string(r.iters);
    out += ',';
    out += hash_hex;
    out += '\n';
  }
  return out;
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& path,
                  std::uint64_t config_hash) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_results: cannot open '" + path + "' for writing");
  f << format_rows(rows, config_hash);
  if (!f) throw std::runtime_error("emit_results: write to '" + path + "' failed");
}

AqnmStats aqnm_empirical_stats(BitDepth B, const MatC& C_in, std::uint64_t seed, int n_samples) {
  const rf::QuantizerModel model = rf::QuantizerModel::make(B);
  const int n = static_cast<int>(C_in.rows());

  // Color the samples with the covariance square root.
  Eigen::SelfAdjointEigenSolver<MatC> eig(C_in);
  const MatC root = eig.eigenvectors() *
                    eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                    eig.eigenvectors().adjoint();
  VecD scale = C_in.diagonal().real().cwiseSqrt();

  RngStream rng = RngStream::child(seed, 0, 0, RngStage::QuantNoise);
  MatC q_cov = MatC::Zero(n, n);
  MatC qx_cov = MatC::Zero(n, n);
  VecC z(n);
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < n; ++i) z(i) = rng.cnormal();
    const VecC x = root * z;
    const VecC q = rf::quantize_signal(x, model, scale) - (1.0 - model.rho) * x;
    q_cov.noalias() += q * q.adjoint();
    qx_cov.noalias() += q * x.adjoint();
  }
  q_cov /= n_samples;
  qx_cov /= n_samples;

  AqnmStats st;
  st.rho = model.rho;
  const MatC expected = rf::aqnm_noise_cov(C_in, model.rho);
  for (int i = 0; i < n; ++i) {
    st.max_diag_rel_err = std::max(
        st.max_diag_rel_err,
        std::abs(q_cov(i, i).real() - expected(i, i).real()) / expected(i, i).real());
    for (int j = 0; j < n; ++j) {
      if (i != j) {
        const double ref = std::sqrt(expected(i, i).real() * expected(j, j).real());
        st.max_offdiag_err = std::max(st.max_offdiag_err, std::abs(q_cov(i, j)) / ref);
      }
      const double denom =
          std::sqrt(q_cov(i, i).real() * C_in(j, j).real());
      st.max_corr = std::max(st.max_corr, std::abs(qx_cov(i, j)) / denom);
    }
  }
  return st;
}

int validate_aqnm(std::uint64_t seed, std::ostream& os) {
  MatC C(2, 2);
  C << cxd(1.0, 0.0), cxd(0.3, -0.2), cxd(0.3, 0.2), cxd(4.0, 0.0);
  const int n_samples = 1000000;

  bool pass = true;
  const double rho1 = rf::distortion_factor(BitDepth::finite(1));
  const double rho1_expected = 1.0 - 2.0 / std::numbers::pi;
  const bool rho_ok = std::abs(rho1 - rho1_expected) <= 1e-6;
  pass = pass && rho_ok;
  os << "rho(1) = " << rho1 << " vs 1-2/pi: " << (rho_ok ? "pass" : "FAIL") << "\n";

  for (int bits = 1; bits <= 4; ++bits) {
    const AqnmStats st = aqnm_empirical_stats(BitDepth::finite(bits), C, seed + bits, n_samples);
    const bool ok =
        st.max_diag_rel_err <= 0.02 && st.max_offdiag_err <= 0.02 && st.max_corr <= 4e-3;
    pass = pass && ok;
    os << "B=" << bits << ": diag rel err " << st.max_diag_rel_err << ", offdiag "
       << st.max_offdiag_err << ", corr " << st.max_corr << " -> " << (ok ? "pass" : "FAIL")
       << "\n";
  }
  return pass ? 0 : 1;
}

}  // namespace cfmimo::harness
