//
// cofdm-sim: experiment runner for the dual-polarisation coherent OFDM link
// simulator. Subcommands: run, sweep-osnr, sweep-sco, phase-profile.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 a result row
// carries an unreliable-estimate flag (results are still written).
//
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cofdm/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned seeds = 0;  // 0: take the config's value
  std::string out_path;
  bool no_timestamp = false;
  std::string dump_iq_path;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_dump) {
  cmd->add_option("--config", a.config_path, "key=value config file (defaults when omitted)");
  cmd->add_option("--seed", a.seed, "base seed");
  cmd->add_option("--seeds", a.seeds, "seeds per sweep point / repeated runs");
  cmd->add_option("--out", a.out_path, "CSV output path");
  cmd->add_flag("--no-timestamp", a.no_timestamp, "suppress the timestamp header line");
  if (with_dump)
    cmd->add_option("--dump-iq", a.dump_iq_path, "dump the post-channel raw samples (IQS1)");
}

cofdm::SimConfig load_config(const CommonArgs& a) {
  if (a.config_path.empty()) return cofdm::SimConfig{};
  return cofdm::parse_config(a.config_path);
}

void print_report(const cofdm::RunReport& r, std::uint64_t seed) {
  using cofdm::detail::fmt_double;
  std::printf("seed: %llu\n", (unsigned long long)seed);
  std::printf("ber: %s\n", fmt_double(r.ber).c_str());
  std::printf("bit_errors: %llu\n", (unsigned long long)r.bit_errors);
  std::printf("bits_counted: %llu\n", (unsigned long long)r.bits_counted);
  std::printf("evm_db: %s\n", fmt_double(r.evm_db).c_str());
  std::printf("gamma_true: %s\n", fmt_double(r.gamma_true).c_str());
  std::printf("gamma_hat: %s\n", fmt_double(r.gamma_hat).c_str());
  std::printf("rel_err: %s\n", fmt_double(r.rel_err).c_str());
  std::printf("flags: %s\n",
              r.flags.empty() ? "(none)" : cofdm::join_flags(r.flags).c_str());
}

int run_cmd(const CommonArgs& a) {
  cofdm::SimConfig cfg = load_config(a);
  const unsigned seeds = a.seeds ? a.seeds : std::max(1u, cfg.seeds);

  cofdm::SweepSpec spec;
  spec.variable = cofdm::SweepVariable::sco_ppm;  // run == degenerate single-value sweep
  spec.values = {cfg.gamma_ppm};
  spec.base = cfg;
  spec.seeds = seeds;
  spec.seed0 = a.seed;
  spec.timestamp = !a.no_timestamp;

  bool flagged = false;
  std::vector<cofdm::SweepRow> rows;
  if (!a.dump_iq_path.empty()) {
    cofdm::IqStream dump;
    cofdm::RunReport rep = cofdm::run_single(cfg, a.seed, &dump);
    cofdm::write_iq_dump(dump, a.dump_iq_path);
    rows.push_back({cfg.gamma_ppm, a.seed, rep});
    for (unsigned s = 1; s < seeds; ++s)
      rows.push_back({cfg.gamma_ppm, a.seed + s, cofdm::run_single(cfg, a.seed + s)});
  } else {
    rows = cofdm::run_sweep(spec);
  }
  for (const auto& row : rows) {
    print_report(row.report, row.seed);
    if (row.report.flagged()) flagged = true;
    if (&row != &rows.back()) std::printf("\n");
  }
  if (!a.out_path.empty()) cofdm::write_sweep_csv(spec, rows, a.out_path);
  return flagged ? 3 : 0;
}

int sweep_cmd(const CommonArgs& a, cofdm::SweepVariable var) {
  cofdm::SimConfig cfg = load_config(a);
  cofdm::SweepSpec spec;
  spec.variable = var;
  spec.values = var == cofdm::SweepVariable::osnr_db ? cfg.osnr_sweep_db : cfg.sco_sweep_ppm;
  spec.base = cfg;
  spec.seeds = a.seeds ? a.seeds : std::max(1u, cfg.seeds);
  spec.seed0 = a.seed;
  spec.timestamp = !a.no_timestamp;

  const auto rows = cofdm::run_sweep(spec);
  const std::string out = a.out_path.empty()
                              ? std::string(cofdm::sweep_variable_name(var)) + "_sweep.csv"
                              : a.out_path;
  cofdm::write_sweep_csv(spec, rows, out);

  bool flagged = false;
  for (const auto& row : rows) flagged |= row.report.flagged();
  std::printf("wrote %zu rows (+aggregates) to %s\n", rows.size(), out.c_str());
  return flagged ? 3 : 0;
}

int phase_profile_cmd(const CommonArgs& a) {
  cofdm::SimConfig cfg = load_config(a);
  const auto res = cofdm::phase_profile(cfg, cfg.phase_profile_symbols, a.seed);
  const std::string out = a.out_path.empty() ? "phase_profile.csv" : a.out_path;
  cofdm::write_phase_profile_csv(cfg, res, out, !a.no_timestamp);
  std::printf("wrote %zu profiles to %s\n", res.profiles.size(), out.c_str());
  for (const auto& fit : res.fits)
    std::printf("slope %.6e rad/index, residual_rms %.3e rad\n", fit.slope, fit.residual_rms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-polarisation coherent OFDM link simulator with sampling-clock synchronisation"};
  app.require_subcommand(1);

  CommonArgs run_args, osnr_args, sco_args, prof_args;
  CLI::App* run = app.add_subcommand("run", "single run, report to stdout and optional CSV");
  add_common(run, run_args, true);
  CLI::App* sweep_osnr = app.add_subcommand("sweep-osnr", "BER/EVM sweep over OSNR");
  add_common(sweep_osnr, osnr_args, false);
  CLI::App* sweep_sco = app.add_subcommand("sweep-sco", "BER/EVM sweep over clock offset (ppm)");
  add_common(sweep_sco, sco_args, false);
  CLI::App* prof = app.add_subcommand("phase-profile", "per-symbol phase ramp diagnostic CSV");
  add_common(prof, prof_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return run_cmd(run_args);
    if (sweep_osnr->parsed()) return sweep_cmd(osnr_args, cofdm::SweepVariable::osnr_db);
    if (sweep_sco->parsed()) return sweep_cmd(sco_args, cofdm::SweepVariable::sco_ppm);
    if (prof->parsed()) return phase_profile_cmd(prof_args);
  } catch (const cofdm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const cofdm::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
