#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cfmimo/harness.hpp"

namespace {

using namespace cfmimo;

struct CliOverrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> precoder;
  std::optional<int> threads;
};

void add_common_flags(CLI::App* cmd, CliOverrides& ov) {
  cmd->add_option("--config", ov.config_path, "Config file (JSON); defaults when omitted");
  cmd->add_option("--seed", ov.seed, "Master RNG seed override");
  cmd->add_option("--out", ov.out, "Output CSV path override");
  cmd->add_option("--precoder", ov.precoder, "Precoder selection: mrt, zf, or both")
      ->check(CLI::IsMember({"mrt", "zf", "both"}));
  cmd->add_option("--threads", ov.threads, "Worker threads across drops");
}

harness::LoadedConfig resolve_config(const CliOverrides& ov, harness::ExperimentKind kind) {
  harness::LoadedConfig cfg = ov.config_path.empty() ? harness::parse_config("")
                                                     : harness::load_config(ov.config_path);
  cfg.exp.kind = kind;
  if (ov.seed) cfg.sys.seed = *ov.seed;
  if (ov.out) cfg.exp.out = *ov.out;
  if (ov.threads) cfg.exp.threads = *ov.threads;
  if (ov.precoder) {
    if (*ov.precoder == "mrt") cfg.exp.precoder = harness::PrecoderSelect::Mrt;
    else if (*ov.precoder == "zf") cfg.exp.precoder = harness::PrecoderSelect::Zf;
    else cfg.exp.precoder = harness::PrecoderSelect::Both;
  }
  cfg.exp.validate();
  return cfg;
}

int run_sweep(const CliOverrides& ov, harness::ExperimentKind kind) {
  const harness::LoadedConfig cfg = resolve_config(ov, kind);
  const auto rows = harness::sweep(cfg);
  harness::emit_results(rows, cfg.exp.out, cfg.config_hash);
  std::cout << rows.size() << " rows -> " << cfg.exp.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free mmWave massive MIMO fronthaul-compression simulator"};
  app.require_subcommand(1);

  CliOverrides ov;
  CLI::App* nmse = app.add_subcommand("nmse-sweep", "Analytic channel-estimation NMSE over (C, B)");
  CLI::App* maxmin = app.add_subcommand("maxmin", "Max-min fairness per coherence block");
  CLI::App* ee = app.add_subcommand("ee-sweep", "Energy-efficiency sweep over (C, B)");
  CLI::App* aqnm = app.add_subcommand("validate-aqnm", "Empirical quantizer-model self-check");
  for (CLI::App* cmd : {nmse, maxmin, ee, aqnm}) add_common_flags(cmd, ov);

  CLI11_PARSE(app, argc, argv);

  try {
    if (nmse->parsed()) return run_sweep(ov, cfmimo::harness::ExperimentKind::NmseSweep);
    if (maxmin->parsed()) return run_sweep(ov, cfmimo::harness::ExperimentKind::MaxminCdf);
    if (ee->parsed()) return run_sweep(ov, cfmimo::harness::ExperimentKind::EeSweep);
    if (aqnm->parsed()) {
      const auto cfg = resolve_config(ov, cfmimo::harness::ExperimentKind::ValidateAqnm);
      return cfmimo::harness::validate_aqnm(cfg.sys.seed, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
