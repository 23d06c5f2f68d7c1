#pragma once
//
// Baseband-equivalent link impairments. Each stage is a pure function of its
// inputs plus an explicit seed, so a run is reproducible bit-for-bit and the
// stages compose in any order a test needs. run_channel applies the full
// chain in link order: polarisation rotation, chromatic dispersion, ASE,
// CFO + laser phase noise, sampling-clock offset, ADC quantization.
//
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "common.hpp"
#include "fft.hpp"
#include "stream.hpp"

namespace cofdm {

struct ChannelParams {
  double gamma = 0.0;                 // relative sampling-clock offset
  double cfo_hz = 5e9;                // carrier frequency offset
  double linewidth_hz = 100e3;        // combined laser linewidth
  double fiber_km = 800.0;
  double dispersion_ps_nm_km = 16.0;
  double wavelength_nm = 1550.0;
  double osnr_db = std::numeric_limits<double>::infinity();  // +inf disables ASE
  unsigned adc_bits = 8;              // 0 disables quantization
  double clip_sigma = 4.0;
  bool pol_rotation = true;
  std::uint64_t pol_rotation_seed = 1;
  std::uint64_t noise_seed = 1;
  // Oracle-test hook: when set, white noise at this per-subcarrier SNR is
  // added at the ASE position instead of OSNR-referenced loading.
  double awgn_snr_db = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    if (!(std::fabs(gamma) <= 1e-3)) fail_param("ChannelParams: |gamma| must be <= 1e-3 (1000 ppm)");
    if (!(osnr_db == std::numeric_limits<double>::infinity()) && !std::isfinite(osnr_db))
      fail_param("ChannelParams: osnr_db must be finite or +inf");
    if (adc_bits > 16) fail_param("ChannelParams: adc_bits must be in [0, 16]");
  }
};

// ---------------------------------------------------------------------------
// Sampling-clock offset emulation.
//
// Output sample m is the band-limited interpolation of the input at position
// m*(1+gamma) in input-sample units: a receiver clock running slow by gamma
// reads the waveform later each sample. Kernel: 64-tap Kaiser-windowed sinc
// (beta 10) evaluated directly per output sample. This is deliberately a
// separate implementation path from resample(), which compensates with a
// precomputed polyphase bank; the two sides of the round trip do not share
// code.
// ---------------------------------------------------------------------------
inline IqStream apply_sco_oracle(const IqStream& in, double gamma,
                                 std::size_t taps = 64, double beta = 10.0) {
  if (!(std::fabs(gamma) <= 1e-3)) fail_param("apply_sco_oracle: |gamma| must be <= 1e-3");
  if (taps < 64 || taps % 2 != 0) fail_param("apply_sco_oracle: taps must be even and >= 64");
  in.check();

  const std::size_t len = in.size();
  IqStream out;
  out.sample_rate_hz = in.sample_rate_hz;
  if (len == 0) return out;

  const long double ratio = 1.0L + (long double)gamma;
  const auto out_len = std::size_t((long double)(len - 1) / ratio) + 1;
  const double half = double(taps) / 2.0;
  const double i0_beta = bessel_i0(beta);

  for (int p = 0; p < 2; ++p) {
    auto v = in.pol(p);
    auto& o = out.pol_mut(p);
    o.resize(out_len);
    for (std::size_t m = 0; m < out_len; ++m) {
      const long double pos = (long double)(m)*ratio;
      const long n0 = long(pos);
      const double mu = double(pos - (long double)n0);
      const double smu = std::sin(pi * mu);
      cplx acc{0.0, 0.0};
      for (std::size_t j = 0; j < taps; ++j) {
        const long i = long(j) - long(taps) / 2 + 1;
        const long idx = n0 + i;
        if (idx < 0 || idx >= long(len)) continue;
        const double t = mu - double(i);
        double snc;
        if (std::fabs(t) < 1e-12) {
          snc = 1.0;
        } else {
          snc = ((i % 2 == 0) ? smu : -smu) / (pi * t);
        }
        const double r = t / half;
        const double warg = 1.0 - r * r;
        if (warg <= 0.0) continue;
        acc += v[std::size_t(idx)] * (snc * bessel_i0(beta * std::sqrt(warg)) / i0_beta);
      }
      o[m] = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Chromatic dispersion: all-pass quadratic phase exp(-j*pi*lambda^2*D*L*f^2/c)
// applied over the whole stream in one transform. sign=-1 gives the exact
// inverse filter.
// ---------------------------------------------------------------------------
inline double cd_phase_coeff(double fiber_km, double dispersion_ps_nm_km, double wavelength_nm) {
  const double lambda_m = wavelength_nm * 1e-9;
  const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
  const double len_m = fiber_km * 1e3;
  return pi * lambda_m * lambda_m * d_si * len_m / speed_of_light;  // s^2
}

inline IqStream apply_cd_phase(const IqStream& in, double coeff_s2, double sign) {
  in.check();
  IqStream out;
  out.sample_rate_hz = in.sample_rate_hz;
  if (coeff_s2 == 0.0 || in.size() == 0) return in;
  const std::size_t n = in.size();
  for (int p = 0; p < 2; ++p) {
    std::vector<cplx> spec(in.pol(p).begin(), in.pol(p).end());
    dft_inplace(spec, false);
    for (std::size_t j = 0; j < n; ++j) {
      const double f = bin_frequency_hz(j, n, in.sample_rate_hz);
      spec[j] *= std::polar(1.0, sign * -coeff_s2 * f * f);
    }
    dft_inplace(spec, true);
    out.pol_mut(p) = std::move(spec);
  }
  return out;
}

inline IqStream apply_cd(const IqStream& in, double fiber_km, double dispersion_ps_nm_km,
                         double wavelength_nm) {
  return apply_cd_phase(in, cd_phase_coeff(fiber_km, dispersion_ps_nm_km, wavelength_nm), +1.0);
}

// ---------------------------------------------------------------------------
// Carrier frequency offset and Wiener laser phase noise. The same phase
// trajectory multiplies both polarisations (one shared laser pair).
// ---------------------------------------------------------------------------
inline IqStream apply_cfo_phase_noise(const IqStream& in, double cfo_hz, double linewidth_hz,
                                      std::uint64_t seed) {
  in.check();
  const double fs = in.sample_rate_hz;
  if (fs <= 0.0) fail_param("apply_cfo_phase_noise: stream needs a sample rate");
  if (std::fabs(cfo_hz) >= fs / 2.0) fail_param("apply_cfo_phase_noise: cfo beyond Nyquist");
  if (linewidth_hz < 0.0) fail_param("apply_cfo_phase_noise: negative linewidth");

  IqStream out = in;
  const std::size_t n = in.size();
  const double sigma = std::sqrt(two_pi * linewidth_hz / fs);
  Rng rng(seed, 0x9f);
  double theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (linewidth_hz > 0.0) theta += sigma * rng.gaussian();
    const cplx rot = std::polar(1.0, two_pi * cfo_hz * double(i) / fs + theta);
    out.x[i] *= rot;
    out.y[i] *= rot;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ASE loading. Circular white gaussian noise added independently per
// polarisation so each rail lands at SNR = OSNR * 2*Bref/fs (dual-pol OSNR
// convention, Bref = 12.5 GHz).
// ---------------------------------------------------------------------------
inline IqStream add_ase_for_osnr(const IqStream& in, double osnr_db, std::uint64_t seed) {
  in.check();
  if (osnr_db == std::numeric_limits<double>::infinity()) return in;
  const double fs = in.sample_rate_hz;
  if (fs <= 0.0) fail_param("add_ase_for_osnr: stream needs a sample rate");
  const double snr = ratio_from_db(osnr_db) * (2.0 * osnr_ref_bw_hz) / fs;

  IqStream out = in;
  Rng rng(seed, 0xA5E);
  for (int p = 0; p < 2; ++p) {
    auto& v = out.pol_mut(p);
    const double psig = mean_power(in.pol(p));
    if (psig <= 0.0) fail_param("add_ase_for_osnr: zero-power input");
    const double amp = std::sqrt(psig / snr);
    for (auto& s : v) s += amp * rng.cgaussian();
  }
  return out;
}

// AWGN at an explicit per-subcarrier SNR (unitary FFT makes time-domain and
// bin noise variances equal). Oracle-test hook, not part of the link chain.
inline IqStream add_awgn_subcarrier_snr(const IqStream& in, double snr_db, std::uint64_t seed) {
  in.check();
  IqStream out = in;
  Rng rng(seed, 0xA5E);
  const double amp = std::sqrt(ratio_from_db(-snr_db));
  for (int p = 0; p < 2; ++p)
    for (auto& s : out.pol_mut(p)) s += amp * rng.cgaussian();
  return out;
}

// ---------------------------------------------------------------------------
// Polarisation rotation: one frequency-flat 2x2 unitary Jones matrix, Haar
// sampled via QR of a complex gaussian matrix.
// ---------------------------------------------------------------------------
using Jones = std::array<cplx, 4>;  // row-major [xx, xy, yx, yy]

inline Jones jones_identity() { return {cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{1, 0}}; }

inline Jones jones_from_seed(std::uint64_t seed) {
  Rng rng(seed, 0x10e5);
  cplx g11 = rng.cgaussian(), g21 = rng.cgaussian();
  cplx g12 = rng.cgaussian(), g22 = rng.cgaussian();
  const double n1 = std::sqrt(std::norm(g11) + std::norm(g21));
  cplx q11 = g11 / n1, q21 = g21 / n1;
  const cplx proj = std::conj(q11) * g12 + std::conj(q21) * g22;
  cplx r12 = g12 - proj * q11, r22 = g22 - proj * q21;
  const double n2 = std::sqrt(std::norm(r12) + std::norm(r22));
  cplx q12 = r12 / n2, q22 = r22 / n2;
  // Fix column phases (diag(R) > 0) so the distribution is exactly Haar.
  const cplx ph1 = std::abs(q11) > 0 ? std::conj(q11) / std::abs(q11) : cplx{1, 0};
  q11 *= ph1;
  q21 *= ph1;
  const cplx d2 = std::conj(q12) * g12 + std::conj(q22) * g22;
  const cplx ph2 = std::abs(d2) > 0 ? std::conj(d2) / std::abs(d2) : cplx{1, 0};
  q12 *= ph2;
  q22 *= ph2;
  return {q11, q12, q21, q22};
}

inline IqStream apply_jones(const IqStream& in, const Jones& j) {
  in.check();
  IqStream out;
  out.sample_rate_hz = in.sample_rate_hz;
  out.x.resize(in.size());
  out.y.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.x[i] = j[0] * in.x[i] + j[1] * in.y[i];
    out.y[i] = j[2] * in.x[i] + j[3] * in.y[i];
  }
  return out;
}

inline IqStream apply_pol_rotation(const IqStream& in, std::uint64_t seed) {
  return apply_jones(in, jones_from_seed(seed));
}

// ---------------------------------------------------------------------------
// ADC: I and Q rails independently clipped at +-clip_sigma times their RMS and
// uniformly quantized (midrise) to 2^bits levels.
// ---------------------------------------------------------------------------
inline IqStream quantize_adc(const IqStream& in, unsigned bits, double clip_sigma = 4.0) {
  if (bits < 1 || bits > 16) fail_param("quantize_adc: bits must be in [1, 16]");
  if (clip_sigma <= 0.0) fail_param("quantize_adc: clip_sigma must be positive");
  in.check();

  IqStream out = in;
  const double levels_half = double(1u << (bits - 1));
  for (int p = 0; p < 2; ++p) {
    auto& v = out.pol_mut(p);
    double pi_acc = 0.0, pq_acc = 0.0;
    for (const cplx& s : v) {
      pi_acc += s.real() * s.real();
      pq_acc += s.imag() * s.imag();
    }
    const double rms_i = std::sqrt(pi_acc / double(v.size()));
    const double rms_q = std::sqrt(pq_acc / double(v.size()));
    auto quant = [&](double val, double rms) {
      const double clip = clip_sigma * rms;
      if (clip <= 0.0) return 0.0;
      const double step = clip / levels_half;
      double idx = std::floor(val / step);
      if (idx >= levels_half) idx = levels_half - 1.0;
      if (idx < -levels_half) idx = -levels_half;
      return (idx + 0.5) * step;
    };
    for (cplx& s : v) s = {quant(s.real(), rms_i), quant(s.imag(), rms_q)};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full chain. Stages with neutral parameters drop out exactly, so a params
// struct with everything disabled is the identity.
//
// The carrier terms are applied after the clock-offset resampling, at the
// rate-scaled frequency cfo*(1+gamma) and with per-sample phase-noise
// variance scaled the same way. This produces exactly the physical
// observation r[m] = s(t_m) * exp(j*(2*pi*cfo*t_m + theta(t_m))) at the skewed
// sampling instants t_m = m*(1+gamma)*T. Modulating first and resampling the
// product would instead push the occupied band past Nyquist (a 5 GHz offset
// on a +-16 GHz signal), where band-limited interpolation is no longer valid.
// ---------------------------------------------------------------------------
inline IqStream run_channel(const IqStream& in, const ChannelParams& prm) {
  prm.validate();
  in.check();
  IqStream s = in;
  if (prm.pol_rotation) s = apply_pol_rotation(s, prm.pol_rotation_seed);
  if (prm.fiber_km > 0.0)
    s = apply_cd(s, prm.fiber_km, prm.dispersion_ps_nm_km, prm.wavelength_nm);
  if (!std::isnan(prm.awgn_snr_db))
    s = add_awgn_subcarrier_snr(s, prm.awgn_snr_db, prm.noise_seed);
  else if (std::isfinite(prm.osnr_db))
    s = add_ase_for_osnr(s, prm.osnr_db, prm.noise_seed);
  if (prm.gamma != 0.0) s = apply_sco_oracle(s, prm.gamma);
  if (prm.cfo_hz != 0.0 || prm.linewidth_hz > 0.0)
    s = apply_cfo_phase_noise(s, prm.cfo_hz * (1.0 + prm.gamma),
                              prm.linewidth_hz * (1.0 + prm.gamma),
                              derive_seed(prm.noise_seed, 0xF0));
  if (prm.adc_bits > 0) s = quantize_adc(s, prm.adc_bits, prm.clip_sigma);
  return s;
}

}  // namespace cofdm
