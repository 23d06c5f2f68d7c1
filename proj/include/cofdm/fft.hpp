#pragma once
//
// Self-contained DFT with unitary scaling (1/sqrt(N) in both directions, so
// round trips are exact inverses and Parseval holds without bookkeeping).
// Power-of-two lengths use iterative radix-2; everything else goes through
// Bluestein's chirp-z algorithm, which is exact for arbitrary N.
//
#include <bit>
#include <cstddef>
#include <utility>

#include "common.hpp"

namespace cofdm {
namespace detail {

// Unscaled in-place radix-2. Twiddle is re-synced from std::polar every 32
// butterflies to stop recurrence error growth on long transforms.
inline void fft_radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? two_pi : -two_pi) / double(len);
    const cplx wstep = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cplx w{1.0, 0.0};
      for (std::size_t k = 0; k < len / 2; ++k) {
        if ((k & 31u) == 0) w = std::polar(1.0, ang * double(k));
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wstep;
      }
    }
  }
}

// Chirp-z: X_k = chirp_k * ((x*chirp) conv conj(chirp))_k with the chirp
// exponent k^2 reduced mod 2n in exact integer arithmetic, so the phase stays
// accurate for long streams.
inline std::vector<cplx> bluestein(const std::vector<cplx>& x, bool inverse) {
  const std::size_t n = x.size();
  const std::size_t m = std::bit_ceil(2 * n - 1);
  const double sign = inverse ? 1.0 : -1.0;

  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t k2 = (std::uint64_t(k) * k) % (2 * n);
    chirp[k] = std::polar(1.0, sign * pi * double(k2) / double(n));
  }

  std::vector<cplx> a(m, cplx{0.0, 0.0});
  std::vector<cplx> b(m, cplx{0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = b[k];
  }

  fft_radix2(a, false);
  fft_radix2(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_radix2(a, true);

  std::vector<cplx> out(n);
  const double norm = 1.0 / double(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * norm * chirp[k];
  return out;
}

}  // namespace detail

inline void dft_inplace(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (std::has_single_bit(n)) {
    detail::fft_radix2(a, inverse);
  } else {
    a = detail::bluestein(a, inverse);
  }
  const double s = 1.0 / std::sqrt(double(n));
  for (cplx& v : a) v *= s;
}

inline std::vector<cplx> dft(std::vector<cplx> a, bool inverse = false) {
  dft_inplace(a, inverse);
  return a;
}

inline std::vector<cplx> idft(std::vector<cplx> a) { return dft(std::move(a), true); }

// Frequency of FFT bin j for an n-point transform at sample rate fs,
// mapped to (-fs/2, fs/2].
inline double bin_frequency_hz(std::size_t j, std::size_t n, double fs) {
  const double half = double(n) / 2.0;
  double idx = double(j);
  if (idx > half) idx -= double(n);
  return idx * fs / double(n);
}

}  // namespace cofdm
