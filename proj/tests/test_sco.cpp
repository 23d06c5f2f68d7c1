#include <gtest/gtest.h>

#include "cofdm/bits.hpp"
#include "cofdm/channel.hpp"
#include "cofdm/sco.hpp"

using namespace cofdm;

namespace {

PhaseProfile make_profile(std::size_t n, double slope, double intercept, std::uint64_t seed,
                          double noise_sigma) {
  PhaseProfile pr;
  pr.symbol_index = 1;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int k = int(i) - int(n) / 2;
    pr.k.push_back(k);
    pr.phase.push_back(slope * k + intercept + (noise_sigma > 0 ? noise_sigma * rng.gaussian() : 0.0));
  }
  return pr;
}

struct LoopSetup {
  OfdmConfig cfg;
  TxRun tx;
  TrainingPair ts;
};

LoopSetup make_loop_setup(std::uint64_t seed, std::size_t n_frames = 1) {
  LoopSetup s;
  const std::size_t per_pol = s.cfg.bits_per_frame_per_pol() * n_frames;
  const auto bx = test_pattern_bits(per_pol, derive_seed(seed, 1));
  const auto by = test_pattern_bits(per_pol, derive_seed(seed, 2));
  s.tx = build_tx(bx, by, s.cfg, seed, n_frames);
  s.ts = gen_training_pair(s.cfg, seed);
  return s;
}

ScoLoopContext loop_ctx(const LoopSetup& s) {
  ScoLoopContext ctx;
  ctx.genie_start = s.tx.genie_start;
  ctx.ts = s.ts;
  return ctx;
}

}  // namespace

// --------------------------------------------------------------------------
// extract_phase
// --------------------------------------------------------------------------

TEST(ExtractPhase, EqualInputsGiveZeroProfile) {
  std::vector<cplx> known{{1, 0}, {0, 1}, {-1, 0}, {0.5, 0.5}};
  std::vector<int> k{-2, -1, 1, 2};
  const auto pr = extract_phase(known, known, k, 3);
  for (double p : pr.phase) EXPECT_NEAR(p, 0.0, 1e-15);
  EXPECT_EQ(pr.symbol_index, 3u);
}

TEST(ExtractPhase, CommonRotationGivesConstantProfile) {
  Rng rng(4);
  std::vector<cplx> known(32);
  for (auto& v : known) v = rng.qpsk_point();
  std::vector<int> k(32);
  for (int i = 0; i < 32; ++i) k[i] = i - 16;
  const double theta = 0.73;
  std::vector<cplx> rx(32);
  for (std::size_t i = 0; i < 32; ++i) rx[i] = known[i] * std::polar(1.0, theta);
  const auto pr = extract_phase(rx, known, k, 0);
  for (double p : pr.phase) EXPECT_NEAR(p, theta, 1e-12);
}

TEST(ExtractPhase, LinearRampRecoveredExactly) {
  // Slope from the phase relation with l=1, gamma=2e-4, N=512, Ns=558.
  const double s = 1.3697e-3;
  Rng rng(5);
  const int half = 206;
  std::vector<cplx> known;
  std::vector<int> kv;
  for (int k = -half + 1; k <= half; ++k) {
    if (k == 0) continue;
    kv.push_back(k);
    known.push_back(rng.qpsk_point());
  }
  std::vector<cplx> rx(known.size());
  for (std::size_t i = 0; i < known.size(); ++i)
    rx[i] = known[i] * std::polar(1.0, s * kv[i]);
  const auto pr = extract_phase(rx, known, kv, 1);
  for (std::size_t i = 0; i < pr.phase.size(); ++i)
    ASSERT_NEAR(pr.phase[i], s * kv[i], 1e-12);
}

TEST(ExtractPhase, ZeroKnownEntryRejected) {
  std::vector<cplx> known{{1, 0}, {0, 0}};
  std::vector<cplx> rx{{1, 0}, {1, 0}};
  std::vector<int> k{1, 2};
  EXPECT_THROW(extract_phase(rx, known, k, 0), std::invalid_argument);
}

// --------------------------------------------------------------------------
// unwrap
// --------------------------------------------------------------------------

TEST(Unwrap, SmoothProfileUnchanged) {
  const auto pr = make_profile(100, 0.01, 0.2, 1, 0.0);
  const auto out = unwrap(pr);
  for (std::size_t i = 0; i < pr.phase.size(); ++i)
    EXPECT_NEAR(out.phase[i], pr.phase[i], 1e-15);
}

TEST(Unwrap, RampCrossingPiRecovered) {
  // 0.1*k for k = 0..200 wraps several times; unwrap must restore the ramp up
  // to one global 2*pi multiple (zero here since the first point is in range).
  PhaseProfile pr;
  pr.symbol_index = 0;
  for (int k = 0; k <= 200; ++k) {
    pr.k.push_back(k);
    pr.phase.push_back(std::remainder(0.1 * k, two_pi));
  }
  const auto out = unwrap(pr);
  for (int k = 0; k <= 200; ++k) EXPECT_NEAR(out.phase[std::size_t(k)], 0.1 * k, 1e-12);
}

TEST(Unwrap, SingleGlitchRemoved) {
  PhaseProfile clean;
  for (int k = 0; k < 50; ++k) {
    clean.k.push_back(k);
    clean.phase.push_back(0.05 * k);
  }
  PhaseProfile glitched = clean;
  glitched.phase[20] += two_pi;
  const auto out = unwrap(glitched);
  // Output equals input mod 2*pi pointwise and matches the clean ramp.
  for (int k = 0; k < 50; ++k) {
    EXPECT_NEAR(out.phase[std::size_t(k)], clean.phase[std::size_t(k)], 1e-12);
    EXPECT_NEAR(std::remainder(out.phase[std::size_t(k)] - glitched.phase[std::size_t(k)], two_pi),
                0.0, 1e-12);
  }
}

// --------------------------------------------------------------------------
// ls_fit
// --------------------------------------------------------------------------

TEST(LsFit, ExactLineRecovered) {
  const auto pr = make_profile(412, 1.25e-3, 0.4, 2, 0.0);
  const auto fit = ls_fit(pr);
  EXPECT_NEAR(fit.slope, 1.25e-3, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.4, 1e-12);
  EXPECT_NEAR(fit.residual_rms, 0.0, 1e-12);
}

TEST(LsFit, ConstantOffsetMovesInterceptOnly) {
  auto pr = make_profile(412, 1.25e-3, 0.0, 3, 0.02);
  const auto fit0 = ls_fit(pr);
  for (auto& p : pr.phase) p += 0.9;
  const auto fit1 = ls_fit(pr);
  EXPECT_NEAR(fit1.slope, fit0.slope, 1e-14);
  EXPECT_NEAR(fit1.intercept - fit0.intercept, 0.9, 1e-12);
  EXPECT_NEAR(fit1.residual_rms, fit0.residual_rms, 1e-12);
}

TEST(LsFit, NoisySlopeWithinThreeSigmaOfBruteForceOracle) {
  const double slope = 2e-3, intercept = -0.1, sigma = 0.05;
  const std::size_t n = 412;
  const auto pr = make_profile(n, slope, intercept, 6, sigma);

  // Brute-force normal equations, accumulated independently.
  double s_k = 0, s_p = 0, s_kk = 0, s_kp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s_k += pr.k[i];
    s_p += pr.phase[i];
    s_kk += double(pr.k[i]) * pr.k[i];
    s_kp += double(pr.k[i]) * pr.phase[i];
  }
  const double denom = double(n) * s_kk - s_k * s_k;
  const double slope_oracle = (double(n) * s_kp - s_k * s_p) / denom;
  const double icpt_oracle = (s_p - slope_oracle * s_k) / double(n);

  const auto fit = ls_fit(pr);
  EXPECT_NEAR(fit.slope, slope_oracle, 1e-14);
  EXPECT_NEAR(fit.intercept, icpt_oracle, 1e-12);

  // Analytic slope standard deviation: sigma / sqrt(sum (k - kbar)^2).
  const double sigma_slope = sigma / std::sqrt(fit.sum_sq_dev);
  EXPECT_LT(std::fabs(fit.slope - slope), 3.0 * sigma_slope);
  EXPECT_NEAR(fit.residual_rms, sigma, 0.2 * sigma);
}

TEST(LsFit, DegenerateInputsRejected) {
  PhaseProfile small;
  for (int i = 0; i < 7; ++i) {
    small.k.push_back(i);
    small.phase.push_back(0.0);
  }
  EXPECT_THROW(ls_fit(small), std::invalid_argument);

  PhaseProfile flat;
  for (int i = 0; i < 10; ++i) {
    flat.k.push_back(5);
    flat.phase.push_back(0.1);
  }
  EXPECT_THROW(ls_fit(flat), std::invalid_argument);
}

// --------------------------------------------------------------------------
// estimate_gamma
// --------------------------------------------------------------------------

TEST(EstimateGamma, DifferentialSlopeArithmetic) {
  OfdmConfig cfg;  // N = 512, Ns = 558
  SlopeFit f1, f2;
  f1.slope = 0.0;
  f2.slope = 1.3697e-3;
  const auto est = estimate_gamma(f1, f2, 4, 5, cfg, ScoMode::differential_ts);
  // Exact inversion of the quoted slope...
  EXPECT_NEAR(est.gamma_hat, 1.3697e-3 * 512.0 / (two_pi * 558.0), 1e-15);
  // ...which is 2.0000e-4 at the 5-figure precision the slope was quoted at.
  EXPECT_NEAR(est.gamma_hat, 2.0000e-4, 5e-8);
}

TEST(EstimateGamma, AbsoluteModeArithmetic) {
  OfdmConfig cfg;
  SlopeFit f1;
  f1.slope = 9.588e-3;  // 7 * 1.3697e-3, the symbol-7 line
  const auto est = estimate_gamma(f1, f1, 7, 8, cfg, ScoMode::absolute_ts);
  EXPECT_NEAR(est.gamma_hat, 2.0000e-4, 5e-8);
}

TEST(EstimateGamma, ZeroSlopesGiveZero) {
  OfdmConfig cfg;
  SlopeFit f{};
  EXPECT_EQ(estimate_gamma(f, f, 4, 5, cfg, ScoMode::differential_ts).gamma_hat, 0.0);
}

TEST(EstimateGamma, ExactRoundTripToFiveFigures) {
  OfdmConfig cfg;
  const double gamma = 2.0000e-4;
  SlopeFit f1, f2;
  f1.slope = two_pi * 4.0 * double(cfg.n_sym()) * gamma / double(cfg.n_fft);
  f2.slope = two_pi * 5.0 * double(cfg.n_sym()) * gamma / double(cfg.n_fft);
  const auto d = estimate_gamma(f1, f2, 4, 5, cfg, ScoMode::differential_ts);
  EXPECT_NEAR(d.gamma_hat, gamma, 1e-12);
  const auto a = estimate_gamma(f2, f2, 5, 6, cfg, ScoMode::absolute_ts);
  EXPECT_NEAR(a.gamma_hat, gamma, 1e-12);
}

TEST(EstimateGamma, EqualSymbolsRejected) {
  OfdmConfig cfg;
  SlopeFit f{};
  EXPECT_THROW(estimate_gamma(f, f, 4, 4, cfg, ScoMode::differential_ts), std::invalid_argument);
  EXPECT_THROW(estimate_gamma(f, f, 0, 5, cfg, ScoMode::absolute_ts), std::invalid_argument);
}

TEST(EstimateGamma, OutOfRangeFlagged) {
  OfdmConfig cfg;
  SlopeFit f1, f2;
  f1.slope = 0.0;
  f2.slope = 0.1;  // absurd slope -> gamma far beyond 1e-3
  const auto est = estimate_gamma(f1, f2, 4, 5, cfg, ScoMode::differential_ts);
  EXPECT_FALSE(est.in_range);
}

// --------------------------------------------------------------------------
// run_sco_loop
// --------------------------------------------------------------------------

TEST(ScoLoop, ZeroOffsetEstimatesNearZero) {
  const auto s = make_loop_setup(100);
  const auto res = run_sco_loop(s.tx.stream, s.cfg, loop_ctx(s));
  EXPECT_LT(std::fabs(res.estimate.gamma_hat), 5e-6);
  EXPECT_TRUE(res.estimate.reliable);
  // Compensated stream stays essentially the input.
  double m = 0.0;
  for (std::size_t i = 64; i + 64 < res.stream.size(); ++i)
    m = std::max(m, std::abs(res.stream.x[i] - s.tx.stream.x[i]));
  EXPECT_LT(m, 1e-3);
}

TEST(ScoLoop, NoiselessEstimateWithinHalfPercent) {
  for (double gamma : {2e-4, -1.9996e-4}) {
    for (std::uint64_t seed = 101; seed < 116; ++seed) {
      const auto s = make_loop_setup(seed);
      const auto skewed = apply_sco_oracle(s.tx.stream, gamma);
      const auto res = run_sco_loop(skewed, s.cfg, loop_ctx(s));
      EXPECT_TRUE(res.estimate.reliable);
      EXPECT_LT(std::fabs(res.estimate.gamma_hat - gamma) / std::fabs(gamma), 0.005)
          << "gamma " << gamma << " seed " << seed;
    }
  }
}

TEST(ScoLoop, SignScaleGridNoiseless) {
  const auto s = make_loop_setup(102);
  for (double gamma : {-2e-4, -1e-4, 0.0, 1e-4, 2e-4}) {
    const auto skewed = gamma != 0.0 ? apply_sco_oracle(s.tx.stream, gamma) : s.tx.stream;
    const auto res = run_sco_loop(skewed, s.cfg, loop_ctx(s));
    if (gamma == 0.0) {
      EXPECT_LT(std::fabs(res.estimate.gamma_hat), 5e-6);
    } else {
      EXPECT_LT(std::fabs(res.estimate.gamma_hat - gamma) / std::fabs(gamma), 0.005)
          << "gamma " << gamma;
    }
  }
}

TEST(ScoLoop, InvariantToConstantPhaseOffset) {
  const auto s = make_loop_setup(103);
  const auto skewed = apply_sco_oracle(s.tx.stream, 2e-4);
  IqStream rotated = skewed;
  const cplx rot = std::polar(1.0, 1.1);
  for (auto& v : rotated.x) v *= rot;
  for (auto& v : rotated.y) v *= rot;
  const auto a = run_sco_loop(skewed, s.cfg, loop_ctx(s));
  const auto b = run_sco_loop(rotated, s.cfg, loop_ctx(s));
  EXPECT_NEAR(a.estimate.gamma_hat, b.estimate.gamma_hat, 1e-12);
}

TEST(ScoLoop, DifferentialModeInvariantToCommonTimingShift) {
  // A fixed timing offset adds the same k-linear phase (-2*pi*k*d/N, huge
  // compared to the clock-offset ramp) to both training symbols. The slope
  // difference cancels it; the absolute single-symbol mode swallows it whole.
  // What survives in differential mode is only the leakage-pattern change of
  // the shifted window, bounded at the estimator's intrinsic accuracy.
  const auto s = make_loop_setup(104);
  const double gamma = 1e-4;
  const auto skewed = apply_sco_oracle(s.tx.stream, gamma);

  IqStream shifted;
  shifted.sample_rate_hz = skewed.sample_rate_hz;
  const std::size_t d = 5;  // stays inside the cyclic-prefix slack left by the window backoff
  shifted.x.assign(skewed.x.begin() + d, skewed.x.end());
  shifted.y.assign(skewed.y.begin() + d, skewed.y.end());

  const auto a = run_sco_loop(skewed, s.cfg, loop_ctx(s));
  const auto b = run_sco_loop(shifted, s.cfg, loop_ctx(s));
  const double diff_change = std::fabs(b.estimate.gamma_hat - a.estimate.gamma_hat);
  EXPECT_LT(diff_change / gamma, 0.005);

  ScoLoopContext abs_ctx = loop_ctx(s);
  abs_ctx.mode = ScoMode::absolute_ts;
  abs_ctx.compensate = false;
  const auto aa = run_sco_loop(skewed, s.cfg, abs_ctx);
  const auto ab = run_sco_loop(shifted, s.cfg, abs_ctx);
  const double abs_change = std::fabs(ab.estimate.gamma_hat - aa.estimate.gamma_hat);
  // The uncancelled k-linear term is ~2*pi*d/N per symbol index l1.
  EXPECT_GT(abs_change, 50.0 * diff_change);
}

TEST(ScoLoop, PolarisationCombiningReducesVariance) {
  const double gamma = 2e-4;
  const std::size_t n_seeds = 60;
  std::vector<double> combined, polx, poly;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    const auto s = make_loop_setup(200 + i);
    auto skewed = apply_sco_oracle(s.tx.stream, gamma);
    skewed = add_ase_for_osnr(skewed, 18.0, 900 + i);
    const auto res = run_sco_loop(skewed, s.cfg, loop_ctx(s));
    combined.push_back(res.estimate.gamma_hat);
    const OfdmConfig& cfg = s.cfg;
    for (int p = 0; p < 2; ++p) {
      const auto est = estimate_gamma(res.estimate.pol_fits[p][0], res.estimate.pol_fits[p][1],
                                      cfg.ts_indices[0], cfg.ts_indices[1], cfg,
                                      ScoMode::differential_ts);
      (p == 0 ? polx : poly).push_back(est.gamma_hat);
    }
  }
  auto variance = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x / double(v.size());
    double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    return s2 / double(v.size() - 1);
  };
  EXPECT_LE(variance(combined), variance(polx));
  EXPECT_LE(variance(combined), variance(poly));
}

TEST(ScoLoop, UnreliableFitSkipsCompensation) {
  const auto s = make_loop_setup(105);
  auto skewed = apply_sco_oracle(s.tx.stream, 2e-4);
  // Bury the training symbols in noise far below any usable SNR.
  skewed = add_ase_for_osnr(skewed, -20.0, 7);
  const auto res = run_sco_loop(skewed, s.cfg, loop_ctx(s));
  EXPECT_FALSE(res.estimate.reliable);
  EXPECT_EQ(res.stream.x, skewed.x);  // untouched
}

TEST(ScoLoop, AbsoluteModeProducesInRangeEstimate) {
  // Absolute single-symbol mode carries the window-centering bias the
  // differential mode cancels; it still lands in the right decade and sign.
  const auto s = make_loop_setup(106);
  const auto skewed = apply_sco_oracle(s.tx.stream, 2e-4);
  ScoLoopContext ctx = loop_ctx(s);
  ctx.mode = ScoMode::absolute_ts;
  const auto res = run_sco_loop(skewed, s.cfg, ctx);
  EXPECT_GT(res.estimate.gamma_hat, 1e-4);
  EXPECT_LT(res.estimate.gamma_hat, 4e-4);
}
