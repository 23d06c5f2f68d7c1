#pragma once
//
// Time-domain interpolation for sampling-clock correction. Two kernels behind
// one interface:
//
//   farrow_cubic:  4-tap cubic-Lagrange Farrow cell. Exact on polynomials up
//                   to degree 3 and cheap, but its passband droops hard above
//                   ~30% of the sample rate, which is far below this project's
//                   occupancy (~41% of fs). Kept for narrowband use and as the
//                   polynomial-reproduction reference.
//   windowed_sinc: Kaiser-windowed sinc evaluated as a polyphase bank with
//                   first-order interpolation across phases (a Farrow cell of
//                   degree 1 on a dense grid). Flat to well below -60 dB over
//                   the occupied band. Default, and the kernel the receiver's
//                   clock-correction loop uses.
//
// Output index m maps to input position m/(1+gamma_hat); the map is strictly
// increasing and computed directly (not accumulated) in extended precision so
// there is no drift over long streams. Edges are zero-extended; the first and
// last `margin()` output samples are transient and callers are expected to
// trim or overbuild (frame guards do this in the pipeline).
//
#include <cstddef>
#include <vector>

#include "common.hpp"
#include "stream.hpp"

namespace cofdm {

enum class InterpKernel { farrow_cubic, windowed_sinc };

struct ResampleSpec {
  InterpKernel structure = InterpKernel::windowed_sinc;
  std::size_t taps = 64;     // windowed_sinc only; even
  double beta = 10.0;        // Kaiser shape
  std::size_t phases = 1024; // polyphase grid density

  std::size_t margin() const {
    return structure == InterpKernel::farrow_cubic ? 2 : taps / 2 + 1;
  }
};

namespace detail {

inline cplx sample_or_zero(std::span<const cplx> v, long idx) {
  return (idx < 0 || idx >= long(v.size())) ? cplx{0.0, 0.0} : v[std::size_t(idx)];
}

inline cplx cubic_lagrange_at(std::span<const cplx> v, long n0, double mu) {
  const double c_m1 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
  const double c_0 = (mu * mu - 1.0) * (mu - 2.0) / 2.0;
  const double c_p1 = -mu * (mu + 1.0) * (mu - 2.0) / 2.0;
  const double c_p2 = mu * (mu * mu - 1.0) / 6.0;
  return c_m1 * sample_or_zero(v, n0 - 1) + c_0 * sample_or_zero(v, n0) +
         c_p1 * sample_or_zero(v, n0 + 1) + c_p2 * sample_or_zero(v, n0 + 2);
}

// Polyphase Kaiser-sinc table: phases+1 rows of `taps` coefficients, each row
// normalized to unit sum so DC passes exactly for every fractional delay.
class SincBank {
 public:
  SincBank(std::size_t taps, double beta, std::size_t phases)
      : taps_(taps), phases_(phases), table_((phases + 1) * taps) {
    if (taps < 8 || taps % 2 != 0) fail_param("SincBank: taps must be even and >= 8");
    const double half = double(taps) / 2.0;
    for (std::size_t ph = 0; ph <= phases; ++ph) {
      const double mu = double(ph) / double(phases);
      double* row = table_.data() + ph * taps;
      double sum = 0.0;
      const double smu = std::sin(pi * mu);
      for (std::size_t j = 0; j < taps; ++j) {
        // Tap j sits at input offset (j - taps/2 + 1) from the base sample.
        const double t = mu - (double(j) - half + 1.0);
        double s;
        if (std::fabs(t) < 1e-12) {
          s = 1.0;
        } else {
          // sin(pi*(mu - i)) = +-sin(pi*mu) for integer i.
          const long i = long(double(j) - half + 1.0);
          const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
          s = sgn * smu / (pi * t);
        }
        row[j] = s * kaiser(t, half, beta);
        sum += row[j];
      }
      for (std::size_t j = 0; j < taps; ++j) row[j] /= sum;
    }
  }

  cplx interp(std::span<const cplx> v, long n0, double mu) const {
    const double phr = mu * double(phases_);
    std::size_t p0 = std::size_t(phr);
    if (p0 >= phases_) p0 = phases_ - 1;
    const double a = phr - double(p0);
    const double* r0 = table_.data() + p0 * taps_;
    const double* r1 = r0 + taps_;
    const long base = n0 - long(taps_) / 2 + 1;
    cplx acc{0.0, 0.0};
    if (base >= 0 && base + long(taps_) <= long(v.size())) {
      const cplx* s = v.data() + base;
      for (std::size_t j = 0; j < taps_; ++j)
        acc += ((1.0 - a) * r0[j] + a * r1[j]) * s[j];
    } else {
      for (std::size_t j = 0; j < taps_; ++j)
        acc += ((1.0 - a) * r0[j] + a * r1[j]) * sample_or_zero(v, base + long(j));
    }
    return acc;
  }

 private:
  std::size_t taps_;
  std::size_t phases_;
  std::vector<double> table_;
};

template <typename Eval>
inline std::vector<cplx> map_positions(std::span<const cplx> v, std::size_t out_len,
                                       long double step, Eval&& eval) {
  std::vector<cplx> out(out_len);
  for (std::size_t m = 0; m < out_len; ++m) {
    const long double pos = (long double)(m)*step;
    const long n0 = long(pos);
    const double mu = double(pos - (long double)(n0));
    out[m] = eval(v, n0, mu);
  }
  return out;
}

}  // namespace detail

// Every output sample is the kernel's interpolation of the input at n + mu.
inline IqStream fractional_delay(const IqStream& in, double mu,
                                 const ResampleSpec& spec = {}) {
  if (!(mu >= 0.0 && mu < 1.0)) fail_param("fractional_delay: mu must be in [0, 1)");
  in.check();
  IqStream out;
  out.sample_rate_hz = in.sample_rate_hz;
  if (spec.structure == InterpKernel::farrow_cubic) {
    for (int p = 0; p < 2; ++p) {
      auto v = in.pol(p);
      auto& o = out.pol_mut(p);
      o.resize(v.size());
      for (std::size_t n = 0; n < v.size(); ++n)
        o[n] = detail::cubic_lagrange_at(v, long(n), mu);
    }
  } else {
    const detail::SincBank bank(spec.taps, spec.beta, spec.phases);
    for (int p = 0; p < 2; ++p) {
      auto v = in.pol(p);
      auto& o = out.pol_mut(p);
      o.resize(v.size());
      for (std::size_t n = 0; n < v.size(); ++n) o[n] = bank.interp(v, long(n), mu);
    }
  }
  return out;
}

// Clock-ratio correction: output m = input at position m/(1+gamma_hat). With
// gamma_hat equal to the true offset applied by a (1+gamma) sampling stage,
// the nominal sample grid is restored.
inline IqStream resample(const IqStream& in, double gamma_hat,
                         const ResampleSpec& spec = {}) {
  if (!(std::fabs(gamma_hat) <= 1e-3)) fail_param("resample: |gamma_hat| must be <= 1e-3");
  in.check();
  const long double step = 1.0L / (1.0L + (long double)gamma_hat);
  const std::size_t len = in.size();
  if (len == 0) return in;
  const auto out_len =
      std::size_t((long double)(len - 1) * (1.0L + (long double)gamma_hat)) + 1;

  IqStream out;
  out.sample_rate_hz = in.sample_rate_hz;
  if (spec.structure == InterpKernel::farrow_cubic) {
    for (int p = 0; p < 2; ++p)
      out.pol_mut(p) = detail::map_positions(in.pol(p), out_len, step,
                                             [](auto v, long n0, double mu) {
                                               return detail::cubic_lagrange_at(v, n0, mu);
                                             });
  } else {
    const detail::SincBank bank(spec.taps, spec.beta, spec.phases);
    for (int p = 0; p < 2; ++p)
      out.pol_mut(p) = detail::map_positions(in.pol(p), out_len, step,
                                             [&bank](auto v, long n0, double mu) {
                                               return bank.interp(v, n0, mu);
                                             });
  }
  return out;
}

}  // namespace cofdm
