#pragma once
//
// OFDM symbol and frame construction/deconstruction: subcarrier mapping,
// unitary IFFT/FFT, cyclic prefix, training pair, and full-frame assembly.
//
#include <cstdint>
#include <span>

#include "bits.hpp"
#include "config.hpp"
#include "fft.hpp"
#include "qam.hpp"
#include "stream.hpp"

namespace cofdm {

// Occupied bins placed per the layout, zeros elsewhere, unitary IFFT, then the
// last n_cp samples prepended as cyclic prefix.
inline std::vector<cplx> modulate_symbol(std::span<const cplx> grid_row,
                                         const OfdmConfig& cfg,
                                         const GridLayout& lay) {
  if (grid_row.size() != lay.n_occupied())
    fail_param("modulate_symbol: grid row length does not match occupied subcarriers");
  std::vector<cplx> bins(cfg.n_fft, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < lay.n_occupied(); ++i) bins[lay.bin_of[i]] = grid_row[i];
  dft_inplace(bins, true);

  std::vector<cplx> out(cfg.n_sym());
  for (std::size_t i = 0; i < cfg.n_cp; ++i) out[i] = bins[cfg.n_fft - cfg.n_cp + i];
  for (std::size_t i = 0; i < cfg.n_fft; ++i) out[cfg.n_cp + i] = bins[i];
  return out;
}

inline std::vector<cplx> modulate_symbol(std::span<const cplx> grid_row, const OfdmConfig& cfg) {
  return modulate_symbol(grid_row, cfg, make_layout(cfg));
}

// CP removal, unitary FFT, occupied-bin extraction. Exact inverse of
// modulate_symbol. The FFT window starts rx_window_backoff samples inside the
// cyclic prefix; the cyclic shift that causes is derotated per bin.
inline std::vector<cplx> demodulate_symbol(std::span<const cplx> samples,
                                           const OfdmConfig& cfg,
                                           const GridLayout& lay) {
  if (samples.size() != cfg.n_sym())
    fail_param("demodulate_symbol: input length does not match symbol length");
  const std::size_t off = cfg.n_cp - cfg.rx_window_backoff;
  std::vector<cplx> bins(samples.begin() + long(off), samples.begin() + long(off + cfg.n_fft));
  dft_inplace(bins, false);
  std::vector<cplx> out(lay.n_occupied());
  for (std::size_t i = 0; i < lay.n_occupied(); ++i) out[i] = bins[lay.bin_of[i]];
  if (cfg.rx_window_backoff != 0) {
    // window[j] = body[(j - B) mod N], so bin k carries exp(-j*2*pi*k*B/N).
    const double step = two_pi * double(cfg.rx_window_backoff) / double(cfg.n_fft);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] *= std::polar(1.0, step * double(lay.occupied_k[i]));
  }
  return out;
}

inline std::vector<cplx> demodulate_symbol(std::span<const cplx> samples, const OfdmConfig& cfg) {
  return demodulate_symbol(samples, cfg, make_layout(cfg));
}

// Constant-amplitude pseudo-random QPSK sequence shared by both training
// symbols; deterministic in the seed.
inline TrainingPair gen_training_pair(const OfdmConfig& cfg, std::uint64_t seed) {
  const GridLayout lay = make_layout(cfg);
  Rng rng(seed, 0x7501);
  TrainingPair ts;
  ts.a.resize(lay.n_occupied());
  for (auto& v : ts.a) v = rng.qpsk_point();
  return ts;
}

namespace detail {
inline cplx seeded_qpsk(std::uint64_t seed, std::uint64_t tag, std::uint64_t frame,
                        std::uint64_t sym, std::uint64_t slot) {
  std::uint64_t s = derive_seed(seed, tag);
  s ^= frame * 0x9e3779b97f4a7c15ULL + sym * 0xc2b2ae3d27d4eb4fULL + slot;
  const std::uint64_t v = splitmix64(s);
  static constexpr double h = std::numbers::sqrt2 / 2.0;
  return {(v & 1) ? h : -h, (v & 2) ? h : -h};
}
}  // namespace detail

// Known pilot tone for (frame, symbol, pilot slot); stateless so transmitter
// and receiver agree without sharing buffers.
inline cplx pilot_value(std::uint64_t seed, std::uint64_t frame, std::uint64_t sym,
                        std::uint64_t slot) {
  return detail::seeded_qpsk(seed, 0x9b07, frame, sym, slot);
}

// Data-cell scrambler phase. A raw test pattern mapped straight onto the
// subcarriers carries long runs of identical constellation points, and those
// turn into impulse-like time peaks that the ADC clip stage then mauls.
// Rotating each data cell by a known pseudo-random QPSK phase restores
// Gaussian peak statistics; the receiver derotates before the decision.
inline cplx scramble_value(std::uint64_t seed, std::uint64_t frame, std::uint64_t sym,
                           std::uint64_t slot) {
  return detail::seeded_qpsk(seed, 0x5c7a, frame, sym, slot);
}

struct Frame {
  FreqGrid grid;    // n_frame_syms x n_occupied, both polarisations
  IqStream stream;  // n_frame_syms * n_sym samples per polarisation
};

// One frame: training pair at ts_indices, 16-QAM data elsewhere, pilots
// embedded in every data symbol. `bits` supplies the x-polarisation block
// followed by the y-polarisation block.
inline Frame assemble_frame(std::span<const std::uint8_t> bits, const OfdmConfig& cfg,
                            std::uint64_t seed, const GridLayout& lay,
                            std::uint64_t frame_index = 0) {
  const std::size_t per_pol = cfg.bits_per_frame_per_pol();
  if (bits.size() < 2 * per_pol) fail_param("assemble_frame: not enough bits");

  const TrainingPair ts = gen_training_pair(cfg, seed);
  Frame fr;
  fr.grid = FreqGrid(cfg.n_frame_syms, lay.n_occupied());
  fr.stream.sample_rate_hz = cfg.sample_rate_hz();

  for (int p = 0; p < 2; ++p) {
    std::span<const std::uint8_t> pol_bits = bits.subspan(std::size_t(p) * per_pol, per_pol);
    std::size_t cursor = 0;
    for (std::size_t l = 0; l < cfg.n_frame_syms; ++l) {
      auto row = fr.grid.row(p, l);
      if (l == cfg.ts_indices[0] || l == cfg.ts_indices[1]) {
        const int which = (l == cfg.ts_indices[1]) ? 1 : 0;
        for (std::size_t i = 0; i < lay.n_occupied(); ++i) row[i] = ts.content(p, which, i);
        continue;
      }
      for (std::size_t i = 0; i < lay.pilot_pos.size(); ++i)
        row[lay.pilot_pos[i]] = pilot_value(seed, frame_index, l, i);
      for (std::size_t i = 0; i < lay.data_pos.size(); ++i) {
        row[lay.data_pos[i]] =
            qam16_map(pol_bits.data() + cursor) * scramble_value(seed, frame_index, l, i);
        cursor += 4;
      }
    }
    auto& out = fr.stream.pol_mut(p);
    out.reserve(cfg.n_frame_syms * cfg.n_sym());
    for (std::size_t l = 0; l < cfg.n_frame_syms; ++l) {
      auto sym = modulate_symbol(fr.grid.row(p, l), cfg, lay);
      out.insert(out.end(), sym.begin(), sym.end());
    }
  }
  return fr;
}

inline Frame assemble_frame(std::span<const std::uint8_t> bits, const OfdmConfig& cfg,
                            std::uint64_t seed) {
  return assemble_frame(bits, cfg, seed, make_layout(cfg));
}

// A transmit run: one guard symbol on each end (random QPSK, never counted)
// so downstream filters and interpolators spend their edge transients on
// throwaway samples; the discarded CP of the first real symbol absorbs the
// rest.
struct TxRun {
  FreqGrid grid;              // n_frames * n_frame_syms rows
  IqStream stream;            // guards included
  std::size_t genie_start = 0;  // sample index of frame 0, symbol 0 (CP start)
  std::size_t n_frames = 0;
};

inline std::vector<cplx> guard_symbol(const OfdmConfig& cfg, const GridLayout& lay, Rng& rng) {
  std::vector<cplx> row(lay.n_occupied());
  for (auto& v : row) v = rng.qpsk_point();
  return modulate_symbol(row, cfg, lay);
}

inline TxRun build_tx(std::span<const std::uint8_t> bits_x,
                      std::span<const std::uint8_t> bits_y,
                      const OfdmConfig& cfg, std::uint64_t seed, std::size_t n_frames) {
  const GridLayout lay = make_layout(cfg);
  const std::size_t per_pol = cfg.bits_per_frame_per_pol();
  if (bits_x.size() < n_frames * per_pol || bits_y.size() < n_frames * per_pol)
    fail_param("build_tx: not enough bits for the requested frames");

  TxRun run;
  run.n_frames = n_frames;
  run.grid = FreqGrid(n_frames * cfg.n_frame_syms, lay.n_occupied());
  run.stream.sample_rate_hz = cfg.sample_rate_hz();
  run.genie_start = cfg.n_sym();

  std::vector<std::uint8_t> frame_bits(2 * per_pol);
  Rng guard_rng(seed, 0x6a2d);

  for (int p = 0; p < 2; ++p) run.stream.pol_mut(p).reserve((n_frames * cfg.n_frame_syms + 2) * cfg.n_sym());

  {
    auto gx = guard_symbol(cfg, lay, guard_rng);
    auto gy = guard_symbol(cfg, lay, guard_rng);
    run.stream.x.insert(run.stream.x.end(), gx.begin(), gx.end());
    run.stream.y.insert(run.stream.y.end(), gy.begin(), gy.end());
  }
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::copy_n(bits_x.data() + f * per_pol, per_pol, frame_bits.data());
    std::copy_n(bits_y.data() + f * per_pol, per_pol, frame_bits.data() + per_pol);
    Frame fr = assemble_frame(frame_bits, cfg, seed, lay, f);
    run.stream.x.insert(run.stream.x.end(), fr.stream.x.begin(), fr.stream.x.end());
    run.stream.y.insert(run.stream.y.end(), fr.stream.y.begin(), fr.stream.y.end());
    for (std::size_t l = 0; l < cfg.n_frame_syms; ++l) {
      auto src_x = fr.grid.row(0, l);
      auto src_y = fr.grid.row(1, l);
      auto dst_x = run.grid.row(0, f * cfg.n_frame_syms + l);
      auto dst_y = run.grid.row(1, f * cfg.n_frame_syms + l);
      std::copy(src_x.begin(), src_x.end(), dst_x.begin());
      std::copy(src_y.begin(), src_y.end(), dst_y.begin());
    }
  }
  {
    auto gx = guard_symbol(cfg, lay, guard_rng);
    auto gy = guard_symbol(cfg, lay, guard_rng);
    run.stream.x.insert(run.stream.x.end(), gx.begin(), gx.end());
    run.stream.y.insert(run.stream.y.end(), gy.begin(), gy.end());
  }
  return run;
}

}  // namespace cofdm
