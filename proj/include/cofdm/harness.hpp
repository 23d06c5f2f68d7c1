#pragma once
//
// Experiment harness: plain-text key=value configuration, single runs,
// seeded Monte-Carlo sweeps over OSNR or clock offset, and the phase-profile
// diagnostic. All analysis output is CSV; plotting is external.
//
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bits.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "iqfile.hpp"
#include "ofdm.hpp"
#include "report.hpp"
#include "rxdsp.hpp"
#include "sco.hpp"

namespace cofdm {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  OfdmConfig ofdm{};

  // Link impairments.
  double gamma_ppm = 0.0;
  double cfo_hz = 5e9;
  double residual_cfo_hz = 1e6;
  double linewidth_hz = 100e3;
  double fiber_km = 800.0;
  double dispersion_ps_nm_km = 16.0;
  double wavelength_nm = 1550.0;
  double osnr_db = std::numeric_limits<double>::infinity();
  unsigned adc_bits = 8;
  double clip_sigma = 4.0;
  bool pol_rotation = true;
  std::uint64_t pol_rotation_seed = 0;  // 0: derive from the run seed
  double awgn_snr_db = std::numeric_limits<double>::quiet_NaN();  // NaN: off

  // Receiver.
  bool sco_compensation = true;
  ScoMode sco_mode = ScoMode::differential_ts;
  double sco_residual_threshold = 0.5;
  InterpKernel resampler = InterpKernel::windowed_sinc;
  unsigned resampler_taps = 64;
  double resampler_beta = 10.0;
  unsigned isfa_window = 5;
  bool cpe = true;
  bool genie_channel = false;

  // Simulation scale.
  std::uint64_t bits_per_run = 32768;  // per polarisation
  unsigned seeds = 1;
  std::vector<double> osnr_sweep_db{14, 16, 18, 20, 22, 24, 26};
  std::vector<double> sco_sweep_ppm{-200, -100, 0, 100, 200};
  unsigned phase_profile_symbols = 7;

  double gamma() const { return gamma_ppm * 1e-6; }

  ResampleSpec resample_spec() const {
    ResampleSpec r;
    r.structure = resampler;
    r.taps = resampler_taps;
    r.beta = resampler_beta;
    return r;
  }
};

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct KeyParser {
  const std::string& where;
  int line;

  [[noreturn]] void die(const std::string& msg) const {
    throw ConfigError(where + ":" + std::to_string(line) + ": " + msg);
  }

  double num(const std::string& key, const std::string& v) const {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    try {
      std::size_t idx = 0;
      const double d = std::stod(v, &idx);
      if (idx != v.size()) die("expected number for key '" + key + "', got '" + v + "'");
      return d;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      die("expected number for key '" + key + "', got '" + v + "'");
    }
  }

  std::uint64_t uint(const std::string& key, const std::string& v) const {
    const double d = num(key, v);
    if (d < 0 || d != std::floor(d) || std::isinf(d))
      die("expected non-negative integer for key '" + key + "', got '" + v + "'");
    return std::uint64_t(d);
  }

  bool boolean(const std::string& key, const std::string& v) const {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    die("expected boolean for key '" + key + "', got '" + v + "'");
  }

  std::vector<double> list(const std::string& key, const std::string& v) const {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(num(key, item));
    }
    if (out.empty()) die("expected a comma-separated list for key '" + key + "'");
    return out;
  }
};

}  // namespace detail

inline void apply_config_line(SimConfig& c, const std::string& key, const std::string& value,
                              const detail::KeyParser& p) {
  using detail::KeyParser;
  if (key == "n_fft") c.ofdm.n_fft = p.uint(key, value);
  else if (key == "n_sc") c.ofdm.n_sc = p.uint(key, value);
  else if (key == "n_cp") c.ofdm.n_cp = p.uint(key, value);
  else if (key == "n_frame_syms") c.ofdm.n_frame_syms = p.uint(key, value);
  else if (key == "n_pilots") c.ofdm.n_pilots = p.uint(key, value);
  else if (key == "dc_null") c.ofdm.dc_null = p.boolean(key, value);
  else if (key == "qam_order") c.ofdm.qam_order = p.uint(key, value);
  else if (key == "sample_rate_hz") c.ofdm.tx_sample_period_s = 1.0 / p.num(key, value);
  else if (key == "ts_index_0") c.ofdm.ts_indices[0] = p.uint(key, value);
  else if (key == "ts_index_1") c.ofdm.ts_indices[1] = p.uint(key, value);
  else if (key == "rx_window_backoff") c.ofdm.rx_window_backoff = p.uint(key, value);
  else if (key == "gamma_ppm") c.gamma_ppm = p.num(key, value);
  else if (key == "cfo_hz") c.cfo_hz = p.num(key, value);
  else if (key == "residual_cfo_hz") c.residual_cfo_hz = p.num(key, value);
  else if (key == "linewidth_hz") c.linewidth_hz = p.num(key, value);
  else if (key == "fiber_km") c.fiber_km = p.num(key, value);
  else if (key == "dispersion_ps_nm_km") c.dispersion_ps_nm_km = p.num(key, value);
  else if (key == "wavelength_nm") c.wavelength_nm = p.num(key, value);
  else if (key == "osnr_db") c.osnr_db = p.num(key, value);
  else if (key == "adc_bits") c.adc_bits = unsigned(p.uint(key, value));
  else if (key == "clip_sigma") c.clip_sigma = p.num(key, value);
  else if (key == "pol_rotation") c.pol_rotation = p.boolean(key, value);
  else if (key == "pol_rotation_seed") c.pol_rotation_seed = p.uint(key, value);
  else if (key == "awgn_snr_db") {
    if (value == "off") c.awgn_snr_db = std::numeric_limits<double>::quiet_NaN();
    else c.awgn_snr_db = p.num(key, value);
  }
  else if (key == "sco_compensation") c.sco_compensation = p.boolean(key, value);
  else if (key == "sco_mode") {
    if (value == "differential") c.sco_mode = ScoMode::differential_ts;
    else if (value == "absolute") c.sco_mode = ScoMode::absolute_ts;
    else p.die("expected 'differential' or 'absolute' for key 'sco_mode'");
  }
  else if (key == "sco_residual_threshold") c.sco_residual_threshold = p.num(key, value);
  else if (key == "resampler") {
    if (value == "sinc") c.resampler = InterpKernel::windowed_sinc;
    else if (value == "cubic") c.resampler = InterpKernel::farrow_cubic;
    else p.die("expected 'sinc' or 'cubic' for key 'resampler'");
  }
  else if (key == "resampler_taps") c.resampler_taps = unsigned(p.uint(key, value));
  else if (key == "resampler_beta") c.resampler_beta = p.num(key, value);
  else if (key == "isfa_window") c.isfa_window = unsigned(p.uint(key, value));
  else if (key == "cpe") c.cpe = p.boolean(key, value);
  else if (key == "genie_channel") c.genie_channel = p.boolean(key, value);
  else if (key == "bits_per_run") c.bits_per_run = p.uint(key, value);
  else if (key == "seeds") c.seeds = unsigned(p.uint(key, value));
  else if (key == "osnr_sweep_db") c.osnr_sweep_db = p.list(key, value);
  else if (key == "sco_sweep_ppm") c.sco_sweep_ppm = p.list(key, value);
  else if (key == "phase_profile_symbols") c.phase_profile_symbols = unsigned(p.uint(key, value));
  else p.die("unknown key '" + key + "'");
}

// key = value, one per line, '#' comments. Unknown keys are rejected with the
// offending line; defaults are the link constants baked above.
inline SimConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  SimConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    detail::KeyParser p{path, lineno};
    if (eq == std::string::npos) p.die("expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) p.die("missing key before '='");
    apply_config_line(c, key, value, p);
  }
  return c;
}

// Canonical echo of every key, used in CSV headers and for reproducibility.
inline std::string serialize_config(const SimConfig& c) {
  using detail::fmt_double;
  std::ostringstream o;
  o << "n_fft=" << c.ofdm.n_fft << " n_sc=" << c.ofdm.n_sc << " n_cp=" << c.ofdm.n_cp
    << " n_frame_syms=" << c.ofdm.n_frame_syms << " n_pilots=" << c.ofdm.n_pilots
    << " dc_null=" << (c.ofdm.dc_null ? "true" : "false") << " qam_order=" << c.ofdm.qam_order
    << " sample_rate_hz=" << fmt_double(c.ofdm.sample_rate_hz())
    << " ts_index_0=" << c.ofdm.ts_indices[0] << " ts_index_1=" << c.ofdm.ts_indices[1]
    << " rx_window_backoff=" << c.ofdm.rx_window_backoff
    << " gamma_ppm=" << fmt_double(c.gamma_ppm) << " cfo_hz=" << fmt_double(c.cfo_hz)
    << " residual_cfo_hz=" << fmt_double(c.residual_cfo_hz)
    << " linewidth_hz=" << fmt_double(c.linewidth_hz) << " fiber_km=" << fmt_double(c.fiber_km)
    << " dispersion_ps_nm_km=" << fmt_double(c.dispersion_ps_nm_km)
    << " wavelength_nm=" << fmt_double(c.wavelength_nm) << " osnr_db=" << fmt_double(c.osnr_db)
    << " adc_bits=" << c.adc_bits << " clip_sigma=" << fmt_double(c.clip_sigma)
    << " pol_rotation=" << (c.pol_rotation ? "true" : "false")
    << " pol_rotation_seed=" << c.pol_rotation_seed
    << " awgn_snr_db=" << (std::isnan(c.awgn_snr_db) ? "off" : fmt_double(c.awgn_snr_db))
    << " sco_compensation=" << (c.sco_compensation ? "true" : "false")
    << " sco_mode=" << (c.sco_mode == ScoMode::differential_ts ? "differential" : "absolute")
    << " sco_residual_threshold=" << fmt_double(c.sco_residual_threshold)
    << " resampler=" << (c.resampler == InterpKernel::windowed_sinc ? "sinc" : "cubic")
    << " resampler_taps=" << c.resampler_taps
    << " resampler_beta=" << fmt_double(c.resampler_beta) << " isfa_window=" << c.isfa_window
    << " cpe=" << (c.cpe ? "true" : "false")
    << " genie_channel=" << (c.genie_channel ? "true" : "false")
    << " bits_per_run=" << c.bits_per_run << " seeds=" << c.seeds
    << " osnr_sweep_db=" << detail::fmt_list(c.osnr_sweep_db)
    << " sco_sweep_ppm=" << detail::fmt_list(c.sco_sweep_ppm)
    << " phase_profile_symbols=" << c.phase_profile_symbols;
  return o.str();
}

namespace detail {
enum : std::uint64_t { kBitsX = 1, kBitsY = 2, kFrame = 3, kPol = 4, kNoise = 5 };
}

inline ChannelParams channel_params(const SimConfig& c, std::uint64_t seed) {
  ChannelParams prm;
  prm.gamma = c.gamma();
  prm.cfo_hz = c.cfo_hz;
  prm.linewidth_hz = c.linewidth_hz;
  prm.fiber_km = c.fiber_km;
  prm.dispersion_ps_nm_km = c.dispersion_ps_nm_km;
  prm.wavelength_nm = c.wavelength_nm;
  prm.osnr_db = c.osnr_db;
  prm.adc_bits = c.adc_bits;
  prm.clip_sigma = c.clip_sigma;
  prm.pol_rotation = c.pol_rotation;
  prm.pol_rotation_seed =
      c.pol_rotation_seed ? c.pol_rotation_seed : derive_seed(seed, detail::kPol);
  prm.noise_seed = derive_seed(seed, detail::kNoise);
  prm.awgn_snr_db = c.awgn_snr_db;
  return prm;
}

// One end-to-end run: de Bruijn payload, transmit, channel, receive, score.
// `rx_dump`, when given, receives the post-channel raw stream.
inline RunReport run_single(const SimConfig& c, std::uint64_t seed, IqStream* rx_dump = nullptr) {
  c.ofdm.validate();
  const std::size_t per_frame = c.ofdm.bits_per_frame_per_pol();
  const std::size_t n_frames = std::max<std::size_t>(1, (c.bits_per_run + per_frame - 1) / per_frame);

  const auto bits_x = test_pattern_bits(n_frames * per_frame, derive_seed(seed, detail::kBitsX));
  const auto bits_y = test_pattern_bits(n_frames * per_frame, derive_seed(seed, detail::kBitsY));
  const std::uint64_t frame_seed = derive_seed(seed, detail::kFrame);
  const TxRun tx = build_tx(bits_x, bits_y, c.ofdm, frame_seed, n_frames);

  const ChannelParams prm = channel_params(c, seed);
  const IqStream rx_in = run_channel(tx.stream, prm);
  if (rx_dump) *rx_dump = rx_in;

  RxContext ctx;
  ctx.cfg = c.ofdm;
  ctx.ts = gen_training_pair(c.ofdm, frame_seed);
  ctx.n_frames = n_frames;
  ctx.genie_start = tx.genie_start;
  ctx.residual_cfo_hz = c.residual_cfo_hz;
  ctx.gamma_true = prm.gamma;
  ctx.cd_coeff_s2 =
      prm.fiber_km > 0.0
          ? cd_phase_coeff(prm.fiber_km, prm.dispersion_ps_nm_km, prm.wavelength_nm)
          : 0.0;
  // The carrier rides the receiver's skewed clock, so the tone the genie
  // removes sits at (cfo - residual)*(1+gamma) in nominal-rate units.
  if (prm.cfo_hz != 0.0)
    ctx.genie_cfo_hz = (prm.cfo_hz - c.residual_cfo_hz) * (1.0 + prm.gamma);
  ctx.sco_compensate = c.sco_compensation;
  ctx.sco_mode = c.sco_mode;
  ctx.sco_residual_threshold = c.sco_residual_threshold;
  ctx.rspec = c.resample_spec();
  ctx.isfa_window = c.isfa_window;
  ctx.cpe_enabled = c.cpe;
  ctx.genie_channel = c.genie_channel;
  ctx.tx_grid = &tx.grid;
  ctx.tx_bits_x = bits_x;
  ctx.tx_bits_y = bits_y;
  ctx.frame_seed = frame_seed;

  RxResult rx = run_rx_pipeline(rx_in, ctx);
  return rx.report;
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------
enum class SweepVariable { osnr_db, sco_ppm };

struct SweepSpec {
  SweepVariable variable = SweepVariable::osnr_db;
  std::vector<double> values;
  SimConfig base;
  unsigned seeds = 1;
  std::uint64_t seed0 = 1;
  bool timestamp = true;
  bool parallel = true;
};

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  RunReport report;
};

inline const char* sweep_variable_name(SweepVariable v) {
  return v == SweepVariable::osnr_db ? "osnr_db" : "sco_ppm";
}

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) fail_param("run_sweep: empty value list");
  if (spec.seeds < 1) fail_param("run_sweep: seeds must be >= 1");

  struct Job {
    double value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : spec.values)
    for (unsigned s = 0; s < spec.seeds; ++s) jobs.push_back({v, spec.seed0 + s});

  std::vector<SweepRow> rows(jobs.size());
  auto work = [&](std::size_t i) {
    SimConfig c = spec.base;
    if (spec.variable == SweepVariable::osnr_db) c.osnr_db = jobs[i].value;
    else c.gamma_ppm = jobs[i].value;
    rows[i].value = jobs[i].value;
    rows[i].seed = jobs[i].seed;
    rows[i].report = run_single(c, jobs[i].seed);
  };

  if (spec.parallel && jobs.size() > 1) {
    const unsigned nthreads = std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                                                 unsigned(jobs.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) work(i);
      });
    for (auto& th : pool) th.join();
  } else {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
  }
  return rows;
}

inline std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (i) out += ";";
    out += flags[i];
  }
  return out;
}

inline void write_csv_row(std::ostream& os, const std::string& var_name, const std::string& value,
                          const std::string& seed, const RunReport& r) {
  using detail::fmt_double;
  os << var_name << ',' << value << ',' << seed << ',' << fmt_double(r.ber) << ','
     << r.bit_errors << ',' << r.bits_counted << ',' << fmt_double(r.evm_db) << ','
     << fmt_double(r.gamma_true) << ',' << fmt_double(r.gamma_hat) << ','
     << fmt_double(r.rel_err) << ',' << join_flags(r.flags) << '\n';
}

inline void write_sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows,
                            const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open output file");
  const std::string var = sweep_variable_name(spec.variable);

  f << "# sweep variable: " << var << "\n";
  f << "# config: " << serialize_config(spec.base) << "\n";
  f << "# seeds per point: " << spec.seeds << " starting at " << spec.seed0 << "\n";
  f << "# rel_err = |gamma_hat - gamma_true| / |gamma_true|, nan when gamma_true = 0\n";
  if (spec.timestamp) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    f << "# generated: " << buf << "\n";
  }
  f << "variable_name,variable_value,seed,ber,bit_errors,bits_counted,evm_db,gamma_true,"
       "gamma_hat,rel_err,flags\n";

  for (double v : spec.values) {
    std::vector<const SweepRow*> group;
    for (const auto& r : rows)
      if (r.value == v) group.push_back(&r);
    for (const auto* r : group)
      write_csv_row(f, var, detail::fmt_double(r->value), std::to_string(r->seed), r->report);

    // Aggregate rows: mean and standard deviation over seeds.
    auto agg = [&](auto getter) {
      double m = 0.0, m2 = 0.0;
      std::size_t n = 0;
      for (const auto* r : group) {
        const double x = getter(r->report);
        if (std::isnan(x)) continue;
        ++n;
        const double d = x - m;
        m += d / double(n);
        m2 += d * (x - m);
      }
      const double mean = n ? m : std::numeric_limits<double>::quiet_NaN();
      const double sd = n > 1 ? std::sqrt(m2 / double(n - 1)) : 0.0;
      return std::pair{mean, n ? sd : std::numeric_limits<double>::quiet_NaN()};
    };
    const auto ber = agg([](const RunReport& r) { return r.ber; });
    const auto evm = agg([](const RunReport& r) { return r.evm_db; });
    const auto gh = agg([](const RunReport& r) { return r.gamma_hat; });
    const auto re = agg([](const RunReport& r) { return r.rel_err; });
    std::vector<std::string> all_flags;
    double err_mean = 0.0, cnt_mean = 0.0;
    for (const auto* r : group) {
      err_mean += double(r->report.bit_errors) / double(group.size());
      cnt_mean += double(r->report.bits_counted) / double(group.size());
      for (const auto& fl : r->report.flags)
        if (std::find(all_flags.begin(), all_flags.end(), fl) == all_flags.end())
          all_flags.push_back(fl);
    }
    using detail::fmt_double;
    f << var << ',' << fmt_double(v) << ",mean," << fmt_double(ber.first) << ','
      << fmt_double(err_mean) << ',' << fmt_double(cnt_mean) << ',' << fmt_double(evm.first)
      << ',' << fmt_double(spec.variable == SweepVariable::sco_ppm ? v * 1e-6 : spec.base.gamma())
      << ',' << fmt_double(gh.first) << ',' << fmt_double(re.first) << ',' << join_flags(all_flags)
      << '\n';
    f << var << ',' << fmt_double(v) << ",std," << fmt_double(ber.second) << ",,,"
      << fmt_double(evm.second) << ",," << fmt_double(gh.second) << ',' << fmt_double(re.second)
      << ",\n";
  }
  if (!f) throw IoError(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Phase-profile diagnostic (compensation disabled).
//
// The probe frame repeats one constant-amplitude QPSK symbol, so the clock
// drift's leakage pattern is identical on every symbol and subtracts out in
// the symbol-0 reference; what remains is the pure per-symbol phase ramp.
// Phases are taken from the x polarisation.
// ---------------------------------------------------------------------------
struct PhaseProfileResult {
  std::vector<PhaseProfile> profiles;  // l = 1..symbols, referenced to symbol 0
  std::vector<SlopeFit> fits;
};

inline PhaseProfileResult phase_profile(const SimConfig& c, unsigned symbols,
                                        std::uint64_t seed) {
  c.ofdm.validate();
  const OfdmConfig& cfg = c.ofdm;
  const GridLayout lay = make_layout(cfg);
  const TrainingPair probe = gen_training_pair(cfg, derive_seed(seed, detail::kFrame));

  IqStream s;
  s.sample_rate_hz = cfg.sample_rate_hz();
  Rng guard_rng(seed, 0x6a2d);
  auto gx = guard_symbol(cfg, lay, guard_rng);
  s.x.insert(s.x.end(), gx.begin(), gx.end());
  auto sym = modulate_symbol(probe.a, cfg, lay);
  for (unsigned l = 0; l <= symbols; ++l) s.x.insert(s.x.end(), sym.begin(), sym.end());
  auto gt = guard_symbol(cfg, lay, guard_rng);
  s.x.insert(s.x.end(), gt.begin(), gt.end());
  s.y = s.x;

  if (c.gamma() != 0.0) s = apply_sco_oracle(s, c.gamma());
  if (std::isfinite(c.osnr_db)) s = add_ase_for_osnr(s, c.osnr_db, derive_seed(seed, detail::kNoise));

  const std::size_t ns = cfg.n_sym();
  const std::size_t start = ns;  // one guard symbol
  std::vector<std::vector<cplx>> rows(symbols + 1);
  for (unsigned l = 0; l <= symbols; ++l) {
    if (start + (l + 1) * ns > s.size()) fail_param("phase_profile: stream too short");
    rows[l] = demodulate_symbol(std::span<const cplx>(s.x).subspan(start + l * ns, ns), cfg, lay);
  }

  PhaseProfileResult out;
  for (unsigned l = 1; l <= symbols; ++l) {
    PhaseProfile pr;
    pr.symbol_index = l;
    pr.k.assign(lay.occupied_k.begin(), lay.occupied_k.end());
    pr.phase.resize(lay.n_occupied());
    for (std::size_t i = 0; i < lay.n_occupied(); ++i)
      pr.phase[i] = std::arg(rows[l][i] * std::conj(rows[0][i]));
    pr = unwrap(pr);
    out.profiles.push_back(pr);
    out.fits.push_back(ls_fit(pr));
  }
  return out;
}

inline void write_phase_profile_csv(const SimConfig& c, const PhaseProfileResult& res,
                                    const std::string& path, bool timestamp) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open output file");
  f << "# phase vs subcarrier per symbol, referenced to symbol 0 (x polarisation)\n";
  f << "# config: " << serialize_config(c) << "\n";
  if (timestamp) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    f << "# generated: " << buf << "\n";
  }
  f << "l,k,phase_rad,fit_rad\n";
  for (std::size_t i = 0; i < res.profiles.size(); ++i) {
    const auto& pr = res.profiles[i];
    const auto& fit = res.fits[i];
    for (std::size_t j = 0; j < pr.k.size(); ++j)
      f << pr.symbol_index << ',' << pr.k[j] << ',' << detail::fmt_double(pr.phase[j]) << ','
        << detail::fmt_double(fit.intercept + fit.slope * pr.k[j]) << '\n';
  }
  if (!f) throw IoError(path + ": write failed");
}

}  // namespace cofdm
