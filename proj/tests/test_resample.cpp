#include <gtest/gtest.h>

#include "cofdm/channel.hpp"
#include "cofdm/ofdm.hpp"
#include "cofdm/resample.hpp"

using namespace cofdm;

namespace {

IqStream tone(double cycles_per_sample, std::size_t n) {
  IqStream s;
  s.sample_rate_hz = 1.0;
  s.x.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.x[i] = std::polar(1.0, two_pi * cycles_per_sample * double(i));
  s.y = s.x;
  return s;
}

IqStream ofdm_stream(std::uint64_t seed, std::size_t n_syms = 12) {
  const OfdmConfig cfg;
  const GridLayout lay = make_layout(cfg);
  Rng rng(seed);
  IqStream s;
  s.sample_rate_hz = cfg.sample_rate_hz();
  for (std::size_t l = 0; l < n_syms; ++l) {
    std::vector<cplx> row(lay.n_occupied());
    for (auto& v : row) v = rng.qpsk_point();
    auto t = modulate_symbol(row, cfg, lay);
    s.x.insert(s.x.end(), t.begin(), t.end());
    std::vector<cplx> row2(lay.n_occupied());
    for (auto& v : row2) v = rng.qpsk_point();
    auto t2 = modulate_symbol(row2, cfg, lay);
    s.y.insert(s.y.end(), t2.begin(), t2.end());
  }
  return s;
}

ResampleSpec cubic_spec() {
  ResampleSpec r;
  r.structure = InterpKernel::farrow_cubic;
  return r;
}

}  // namespace

TEST(FractionalDelay, MuZeroIsIdentity) {
  const auto in = ofdm_stream(1, 2);
  for (auto spec : {ResampleSpec{}, cubic_spec()}) {
    const auto out = fractional_delay(in, 0.0, spec);
    double m = 0.0;
    for (std::size_t i = spec.margin(); i + spec.margin() < in.size(); ++i)
      m = std::max(m, std::abs(out.x[i] - in.x[i]));
    EXPECT_LT(m, 1e-12);
  }
}

TEST(FractionalDelay, MuRangeEnforced) {
  const auto in = tone(0.1, 64);
  EXPECT_THROW(fractional_delay(in, 1.0), std::invalid_argument);
  EXPECT_THROW(fractional_delay(in, -0.1), std::invalid_argument);
}

TEST(FractionalDelay, CubicReproducesPolynomials) {
  // Cubic Lagrange is exact on polynomials of degree <= 3.
  IqStream in;
  in.sample_rate_hz = 1.0;
  const std::size_t n = 200;
  in.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = double(i);
    in.x[i] = {0.3 * t * t * t - 2.0 * t * t + 5.0 * t - 7.0, 0.5 * t * t + 1.0};
  }
  in.y = in.x;
  for (double mu : {0.25, 0.5, 0.9}) {
    const auto out = fractional_delay(in, mu, cubic_spec());
    double m = 0.0;
    for (std::size_t i = 2; i + 3 < n; ++i) {
      const double t = double(i) + mu;
      const cplx want{0.3 * t * t * t - 2.0 * t * t + 5.0 * t - 7.0, 0.5 * t * t + 1.0};
      m = std::max(m, std::abs(out.x[i] - want) / std::abs(want));
    }
    EXPECT_LT(m, 1e-10) << "mu=" << mu;
  }
}

TEST(FractionalDelay, DcPreservedForAllMu) {
  IqStream in;
  in.sample_rate_hz = 1.0;
  in.x.assign(256, cplx{0.7, -0.2});
  in.y = in.x;
  for (auto spec : {ResampleSpec{}, cubic_spec()}) {
    for (double mu : {0.1, 0.37, 0.5, 0.77}) {
      const auto out = fractional_delay(in, mu, spec);
      for (std::size_t i = spec.margin(); i + spec.margin() < in.size(); ++i)
        ASSERT_LT(std::abs(out.x[i] - in.x[i]), 1e-9) << "mu=" << mu;
    }
  }
}

TEST(FractionalDelay, TonePhaseMatchesAnalyticShift) {
  // Default kernel: phase shift 2*pi*f*mu/fs within 1e-3 rad up to 0.3 fs.
  const std::size_t n = 4096;
  for (double nu : {0.05, 0.15, 0.30}) {
    const auto in = tone(nu, n);
    for (double mu : {0.2, 0.5, 0.8}) {
      const auto out = fractional_delay(in, mu, ResampleSpec{});
      const double want = two_pi * nu * mu;
      double worst = 0.0;
      for (std::size_t i = 64; i + 64 < n; ++i) {
        const double got = std::arg(out.x[i] * std::conj(in.x[i]));
        worst = std::max(worst, std::fabs(std::remainder(got - want, two_pi)));
      }
      EXPECT_LT(worst, 1e-3) << "nu=" << nu << " mu=" << mu;
    }
  }
}

TEST(Resample, GammaZeroIsIdentity) {
  const auto in = ofdm_stream(2, 3);
  for (auto spec : {ResampleSpec{}, cubic_spec()}) {
    const auto out = resample(in, 0.0, spec);
    ASSERT_EQ(out.size(), in.size());
    double m = 0.0;
    for (std::size_t i = spec.margin(); i + spec.margin() < in.size(); ++i)
      m = std::max(m, std::abs(out.x[i] - in.x[i]));
    EXPECT_LT(m, 1e-12);
  }
}

TEST(Resample, RatioRangeEnforced) {
  const auto in = tone(0.1, 64);
  EXPECT_THROW(resample(in, 2e-3), std::invalid_argument);
}

TEST(Resample, MonotoneMapping) {
  // A strictly increasing real ramp stays strictly increasing: no reordering.
  IqStream in;
  in.sample_rate_hz = 1.0;
  in.x.resize(4000);
  for (std::size_t i = 0; i < in.x.size(); ++i) in.x[i] = {double(i), 0.0};
  in.y = in.x;
  const auto out = resample(in, 2e-4, ResampleSpec{});
  for (std::size_t i = 33; i + 33 < out.size(); ++i)
    ASSERT_GT(out.x[i].real(), out.x[i - 1].real());
}

TEST(Resample, RoundTripEvmMeetsBudgetOnOfdmSignal) {
  // Emulated clock offset followed by compensation at the same value.
  const auto in = ofdm_stream(3);
  const double gamma = 2e-4;
  const auto skewed = apply_sco_oracle(in, gamma);
  const auto fixed = resample(skewed, gamma, ResampleSpec{});
  const std::size_t n = std::min(fixed.size(), in.size());
  const double e = evm_db(std::span<const cplx>(fixed.x).first(n),
                          std::span<const cplx>(in.x).first(n), 0.9);
  EXPECT_LE(e, -35.0);
}

TEST(Resample, SincKernelOutperformsCubicAtFullOccupancy) {
  // The 4-tap cubic droops hard at 80% band occupancy; the polyphase sinc is
  // the default for exactly this reason.
  const auto in = ofdm_stream(4);
  const double gamma = 2e-4;
  const auto skewed = apply_sco_oracle(in, gamma);
  const auto s = resample(skewed, gamma, ResampleSpec{});
  const auto c = resample(skewed, gamma, cubic_spec());
  const std::size_t n = std::min({s.size(), c.size(), in.size()});
  const double es = evm_db(std::span<const cplx>(s.x).first(n),
                           std::span<const cplx>(in.x).first(n), 0.9);
  const double ec = evm_db(std::span<const cplx>(c.x).first(n),
                           std::span<const cplx>(in.x).first(n), 0.9);
  EXPECT_LE(es, ec - 20.0);
}
