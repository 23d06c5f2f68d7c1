#pragma once
//
// Shared numeric primitives: complex alias, seeded RNG, dB conversions,
// Kaiser window math. Everything is value-based and thread-safe when each
// caller owns its own Rng.
//
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cofdm {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double speed_of_light = 299792458.0;  // m/s

// OSNR reference bandwidth: 0.1 nm at 1550 nm.
inline constexpr double osnr_ref_bw_hz = 12.5e9;

[[noreturn]] inline void fail_param(const std::string& msg) {
  throw std::invalid_argument(msg);
}

inline double db_from_ratio(double r) { return 10.0 * std::log10(r); }
inline double ratio_from_db(double db) { return std::pow(10.0, db / 10.0); }

inline double mean_power(std::span<const cplx> v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (const cplx& s : v) acc += std::norm(s);
  return acc / double(v.size());
}

// Error-vector power of `v` against reference `ref` in dB, both trimmed to the
// central fraction (edge transients from filters/interpolators excluded).
inline double evm_db(std::span<const cplx> v, std::span<const cplx> ref,
                     double central_fraction = 0.9) {
  const std::size_t n = std::min(v.size(), ref.size());
  if (n == 0) fail_param("evm_db: empty input");
  const auto skip = std::size_t(double(n) * (1.0 - central_fraction) / 2.0);
  double err = 0.0, sig = 0.0;
  for (std::size_t i = skip; i < n - skip; ++i) {
    err += std::norm(v[i] - ref[i]);
    sig += std::norm(ref[i]);
  }
  if (sig <= 0.0) fail_param("evm_db: zero-power reference");
  return db_from_ratio(err / sig);
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent substream seed; `stream` tags the consumer so one
// master seed fans out to uncorrelated generators.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 0x9e3779b9ULL));
  (void)splitmix64(s);
  return splitmix64(s);
}

// Small deterministic generator. splitmix64 core, Box-Muller for gaussians;
// output sequence is pinned by this implementation, not the standard library,
// so identical seeds give bit-identical runs everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(derive_seed(seed, stream)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  bool next_bit() { return (next_u64() >> 63) != 0; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  // Circularly-symmetric complex gaussian with unit total variance.
  cplx cgaussian() {
    const double a = gaussian() * std::numbers::sqrt2 / 2.0;
    const double b = gaussian() * std::numbers::sqrt2 / 2.0;
    return {a, b};
  }

  // Unit-magnitude QPSK point, one of (+-1 +-j)/sqrt(2).
  cplx qpsk_point() {
    static constexpr double h = std::numbers::sqrt2 / 2.0;
    const std::uint64_t v = next_u64();
    return {(v & 1) ? h : -h, (v & 2) ? h : -h};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Modified Bessel function of the first kind, order zero. Abramowitz-Stegun
// 9.8.1/9.8.2 polynomial fits, relative error below 2e-7, adequate for
// window generation (error lands ~130 dB down).
inline double bessel_i0(double x) {
  const double ax = std::fabs(x);
  if (ax < 3.75) {
    const double t = (x / 3.75) * (x / 3.75);
    return 1.0 + t * (3.5156229 + t * (3.0899424 + t * (1.2067492 +
               t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))));
  }
  const double t = 3.75 / ax;
  return (std::exp(ax) / std::sqrt(ax)) *
         (0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565 +
          t * (0.00916281 + t * (-0.02057706 + t * (0.02635537 +
          t * (-0.01647633 + t * 0.00392377))))))));
}

// Kaiser window value at offset x from center, half-width `half`, shape beta.
inline double kaiser(double x, double half, double beta) {
  const double r = x / half;
  const double arg = 1.0 - r * r;
  if (arg <= 0.0) return 0.0;
  return bessel_i0(beta * std::sqrt(arg)) / bessel_i0(beta);
}

}  // namespace cofdm
