#pragma once
//
// Sampling-clock offset estimation from the channel-estimation training pair.
//
// A clock ratio (1+gamma) shifts every received sample by n*gamma*T, which
// after the FFT shows up as a phase ramp across subcarriers whose slope at
// symbol l is s_l = 2*pi*l*Ns*gamma/N. The estimator measures that slope on
// the two training symbols with an ordinary least-squares fit (the intercept
// soaks up common phase from residual CFO/phase noise) and inverts the slope
// relation for gamma. Differential mode uses the slope difference between the
// two training symbols, which cancels every k-linear term they share: static
// timing offset, the CP/window-centering bias, and the training sequence's
// own leakage pattern. The loop runs once, resamples, and is then bypassed.
//
#include <cstdint>

#include "config.hpp"
#include "ofdm.hpp"
#include "resample.hpp"
#include "stream.hpp"

namespace cofdm {

struct PhaseProfile {
  std::vector<double> phase;  // radians
  std::vector<int> k;         // subcarrier index per entry
  std::size_t symbol_index = 0;
};

struct SlopeFit {
  double slope = 0.0;          // radians per subcarrier index
  double intercept = 0.0;      // radians
  double residual_rms = 0.0;   // radians
  double sum_sq_dev = 0.0;     // sum (k - mean k)^2, for variance diagnostics
};

enum class ScoMode { differential_ts, absolute_ts };

struct ScoEstimate {
  double gamma_hat = 0.0;
  ScoMode mode = ScoMode::differential_ts;
  SlopeFit fit1, fit2;             // per training symbol, combined across polarisations
  SlopeFit pol_fits[2][2];         // [pol][ts] raw fits, diagnostics
  std::size_t l1 = 0, l2 = 0;      // training-symbol indices used
  bool reliable = true;
  bool in_range = true;
};

// phases[i] = arg(received[i] * conj(known[i])), principal value in (-pi, pi].
inline PhaseProfile extract_phase(std::span<const cplx> received, std::span<const cplx> known,
                                  std::span<const int> k_index, std::size_t l) {
  if (received.size() != known.size() || received.size() != k_index.size())
    fail_param("extract_phase: length mismatch");
  PhaseProfile pr;
  pr.symbol_index = l;
  pr.phase.resize(received.size());
  pr.k.assign(k_index.begin(), k_index.end());
  for (std::size_t i = 0; i < received.size(); ++i) {
    if (known[i] == cplx{0.0, 0.0}) fail_param("extract_phase: zero entry in known symbol");
    pr.phase[i] = std::arg(received[i] * std::conj(known[i]));
  }
  return pr;
}

// Successive differences pulled into (-pi, pi]; output equals input mod 2*pi
// pointwise.
inline PhaseProfile unwrap(const PhaseProfile& in) {
  PhaseProfile out = in;
  for (std::size_t i = 1; i < out.phase.size(); ++i) {
    const double d = std::remainder(in.phase[i] - out.phase[i - 1], two_pi);
    out.phase[i] = out.phase[i - 1] + d;
  }
  return out;
}

// Ordinary least squares of phase on k, closed-form normal equations.
inline SlopeFit ls_fit(const PhaseProfile& pr) {
  const std::size_t n = pr.phase.size();
  if (n < 8) fail_param("ls_fit: need at least 8 points");
  double km = 0.0, pm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    km += pr.k[i];
    pm += pr.phase[i];
  }
  km /= double(n);
  pm /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dk = double(pr.k[i]) - km;
    sxx += dk * dk;
    sxy += dk * (pr.phase[i] - pm);
  }
  if (sxx <= 0.0) fail_param("ls_fit: degenerate subcarrier index set");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = pm - fit.slope * km;
  fit.sum_sq_dev = sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = pr.phase[i] - (fit.intercept + fit.slope * double(pr.k[i]));
    rss += r * r;
  }
  fit.residual_rms = std::sqrt(rss / double(n));
  return fit;
}

// Inverts s_l = 2*pi*l*Ns*gamma/N. Differential mode uses the slope change
// between two symbols; absolute mode trusts a single symbol's index.
inline ScoEstimate estimate_gamma(const SlopeFit& fit1, const SlopeFit& fit2,
                                  std::size_t l1, std::size_t l2,
                                  const OfdmConfig& cfg, ScoMode mode) {
  ScoEstimate est;
  est.mode = mode;
  est.fit1 = fit1;
  est.fit2 = fit2;
  est.l1 = l1;
  est.l2 = l2;
  const double ns = double(cfg.n_sym());
  const double n = double(cfg.n_fft);
  if (mode == ScoMode::differential_ts) {
    if (l2 <= l1) fail_param("estimate_gamma: differential mode needs l2 > l1");
    est.gamma_hat = (fit2.slope - fit1.slope) * n / (two_pi * double(l2 - l1) * ns);
  } else {
    if (l1 < 1) fail_param("estimate_gamma: absolute mode needs l1 >= 1");
    est.gamma_hat = fit1.slope * n / (two_pi * double(l1) * ns);
  }
  est.in_range = std::fabs(est.gamma_hat) <= 1e-3;
  return est;
}

struct ScoLoopContext {
  std::size_t genie_start = 0;   // sample index of frame 0, symbol 0 (CP start)
  TrainingPair ts;
  ScoMode mode = ScoMode::differential_ts;
  double residual_threshold = 0.5;  // rad; above this the estimate is not trusted
  bool compensate = true;
  ResampleSpec rspec{};
};

struct ScoLoopResult {
  IqStream stream;
  ScoEstimate estimate;
};

// One-shot feedback loop: demodulate the training pair, fit per polarisation,
// combine, resample the raw stream once at the estimate. The estimator is not
// re-run on the compensated stream.
//
// Per training symbol the two polarisation slopes are combined by inverse
// residual variance. A random unitary channel can null one (pol, TS)
// combination outright (the |a+b| and |a-b| gains trade off); the weighting keeps
// the surviving measurements in charge; with balanced residuals it reduces to
// the plain two-polarisation mean.
inline ScoLoopResult run_sco_loop(const IqStream& raw, const OfdmConfig& cfg,
                                  const ScoLoopContext& ctx) {
  const GridLayout lay = make_layout(cfg);
  const std::size_t ns = cfg.n_sym();

  ScoEstimate est;
  est.mode = ctx.mode;
  est.l1 = cfg.ts_indices[0];
  est.l2 = cfg.ts_indices[1];

  double combined_slope[2];
  double combined_intercept[2];
  double best_residual[2];

  for (int t = 0; t < 2; ++t) {
    const std::size_t l = cfg.ts_indices[t];
    const std::size_t start = ctx.genie_start + l * ns;
    if (start + ns > raw.size()) fail_param("run_sco_loop: stream too short for training symbols");

    double wsum = 0.0, ssum = 0.0, bsum = 0.0;
    best_residual[t] = std::numeric_limits<double>::infinity();
    std::vector<cplx> known(lay.n_occupied());
    for (int p = 0; p < 2; ++p) {
      auto bins = demodulate_symbol(raw.pol(p).subspan(start, ns), cfg, lay);
      for (std::size_t i = 0; i < known.size(); ++i) known[i] = ctx.ts.content(p, t, i);
      PhaseProfile pr = unwrap(extract_phase(bins, known, lay.occupied_k, l));
      const SlopeFit fit = ls_fit(pr);
      est.pol_fits[p][t] = fit;
      const double w = 1.0 / (fit.residual_rms * fit.residual_rms + 1e-12);
      wsum += w;
      ssum += w * fit.slope;
      bsum += w * fit.intercept;
      best_residual[t] = std::min(best_residual[t], fit.residual_rms);
    }
    combined_slope[t] = ssum / wsum;
    combined_intercept[t] = bsum / wsum;
  }

  SlopeFit f1, f2;
  f1.slope = combined_slope[0];
  f1.intercept = combined_intercept[0];
  f1.residual_rms = best_residual[0];
  f1.sum_sq_dev = est.pol_fits[0][0].sum_sq_dev;
  f2.slope = combined_slope[1];
  f2.intercept = combined_intercept[1];
  f2.residual_rms = best_residual[1];
  f2.sum_sq_dev = est.pol_fits[0][1].sum_sq_dev;

  ScoEstimate ge = estimate_gamma(f1, f2, est.l1, est.l2, cfg, ctx.mode);
  est.gamma_hat = ge.gamma_hat;
  est.in_range = ge.in_range;
  est.fit1 = f1;
  est.fit2 = f2;
  est.reliable = std::max(best_residual[0], best_residual[1]) <= ctx.residual_threshold;

  ScoLoopResult res;
  res.estimate = est;
  if (ctx.compensate && est.reliable && est.in_range) {
    res.stream = resample(raw, est.gamma_hat, ctx.rspec);
  } else {
    res.stream = raw;
  }
  return res;
}

}  // namespace cofdm
