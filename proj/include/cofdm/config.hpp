#pragma once
//
// OFDM frame geometry. n_sc counts the data-bearing subcarriers; pilots ride
// on top of them, so the occupied band spans n_sc + n_pilots bins laid out
// symmetrically around (and excluding) DC.
//
#include <array>
#include <cstddef>
#include <vector>

#include "common.hpp"

namespace cofdm {

struct OfdmConfig {
  std::size_t n_fft = 512;         // N
  std::size_t n_sc = 412;          // data subcarriers
  std::size_t n_cp = 46;           // cyclic prefix samples
  std::size_t n_frame_syms = 12;   // L, OFDM symbols per frame (training pair included)
  std::size_t n_pilots = 8;        // pilot tones embedded in data symbols
  bool dc_null = true;
  std::size_t qam_order = 16;
  double tx_sample_period_s = 1.0 / 40e9;  // T_t
  std::array<std::size_t, 2> ts_indices{4, 5};
  // Receiver-side FFT window backoff into the cyclic prefix. Interpolation
  // kernels span +-taps/2 input samples, so a window flush against the symbol
  // boundary reads a blend with the next symbol's head; backing off keeps the
  // kernel support inside the symbol. The known k-linear phase the shift adds
  // is derotated during demodulation, so loopback stays exact.
  std::size_t rx_window_backoff = 23;

  std::size_t n_sym() const { return n_fft + n_cp; }           // N_s
  std::size_t n_occupied() const { return n_sc + n_pilots; }
  std::size_t n_data_syms() const { return n_frame_syms - 2; }
  double sample_rate_hz() const { return 1.0 / tx_sample_period_s; }
  std::size_t bits_per_frame_per_pol() const { return n_data_syms() * n_sc * 4; }

  void validate() const {
    if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0) fail_param("OfdmConfig: n_fft must be a power of two");
    if (n_sym() != n_fft + n_cp) fail_param("OfdmConfig: n_sym identity violated");
    if (n_occupied() > n_fft - 1) fail_param("OfdmConfig: occupied subcarriers exceed FFT size");
    if (dc_null && n_occupied() % 2 != 0) fail_param("OfdmConfig: occupied count must be even with a nulled DC");
    if (qam_order != 16) fail_param("OfdmConfig: only 16-QAM is supported");
    if (n_frame_syms < 3) fail_param("OfdmConfig: frame needs the training pair plus data");
    if (!(ts_indices[0] < ts_indices[1] && ts_indices[1] < n_frame_syms))
      fail_param("OfdmConfig: ts_indices must be ordered and inside the frame");
    if (n_pilots < 2) fail_param("OfdmConfig: need at least 2 pilots");
    if (tx_sample_period_s <= 0.0) fail_param("OfdmConfig: sample period must be positive");
    if (rx_window_backoff >= n_cp) fail_param("OfdmConfig: window backoff must stay inside the CP");
  }
};

// Precomputed index maps for one configuration: which k-indices are occupied,
// where they live in the FFT, and which occupied positions are pilots.
struct GridLayout {
  std::vector<int> occupied_k;           // sorted subcarrier indices
  std::vector<std::size_t> bin_of;       // FFT bin per occupied position
  std::vector<std::size_t> pilot_pos;    // positions (into occupied_k) carrying pilots
  std::vector<std::size_t> data_pos;     // remaining positions
  std::vector<int> pilot_k;              // pilot subcarrier indices

  std::size_t n_occupied() const { return occupied_k.size(); }
};

inline GridLayout make_layout(const OfdmConfig& cfg) {
  cfg.validate();
  GridLayout lay;
  const int m = int(cfg.n_occupied());
  if (cfg.dc_null) {
    // k in {-M/2, ..., M/2} \ {0}: exactly M bins, DC-free and symmetric.
    for (int k = -m / 2; k <= m / 2; ++k)
      if (k != 0) lay.occupied_k.push_back(k);
  } else {
    for (int k = -m / 2 + 1; k <= m / 2; ++k) lay.occupied_k.push_back(k);
  }

  lay.bin_of.reserve(lay.occupied_k.size());
  for (int k : lay.occupied_k) {
    const int n = int(cfg.n_fft);
    lay.bin_of.push_back(std::size_t(((k % n) + n) % n));
  }

  // Pilots evenly spread over the occupied positions.
  const std::size_t p = cfg.n_pilots;
  const std::size_t occ = lay.occupied_k.size();
  std::vector<bool> is_pilot(occ, false);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t pos = (2 * i + 1) * occ / (2 * p);
    is_pilot[pos] = true;
  }
  for (std::size_t pos = 0; pos < occ; ++pos) {
    if (is_pilot[pos]) {
      lay.pilot_pos.push_back(pos);
      lay.pilot_k.push_back(lay.occupied_k[pos]);
    } else {
      lay.data_pos.push_back(pos);
    }
  }
  if (lay.data_pos.size() != cfg.n_sc) fail_param("make_layout: pilot placement collision");
  return lay;
}

}  // namespace cofdm
