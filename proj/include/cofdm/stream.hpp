#pragma once
//
// Sample- and grid-domain containers shared across the chain.
//
#include <cstddef>
#include <span>
#include <vector>

#include "common.hpp"

namespace cofdm {

// Dual-polarisation complex baseband stream. Both rails always have the same
// length.
struct IqStream {
  std::vector<cplx> x;
  std::vector<cplx> y;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return x.size(); }

  void check() const {
    if (x.size() != y.size()) fail_param("IqStream: polarisation lengths differ");
  }

  std::span<const cplx> pol(int p) const { return p == 0 ? x : y; }
  std::vector<cplx>& pol_mut(int p) { return p == 0 ? x : y; }
};

// Frequency-domain lattice: n_syms rows by n_bins occupied subcarriers, one
// plane per polarisation, row-major.
struct FreqGrid {
  std::size_t n_syms = 0;
  std::size_t n_bins = 0;
  std::vector<cplx> x;
  std::vector<cplx> y;

  FreqGrid() = default;
  FreqGrid(std::size_t syms, std::size_t bins)
      : n_syms(syms), n_bins(bins), x(syms * bins), y(syms * bins) {}

  std::span<cplx> row(int p, std::size_t l) {
    auto& v = p == 0 ? x : y;
    return {v.data() + l * n_bins, n_bins};
  }
  std::span<const cplx> row(int p, std::size_t l) const {
    const auto& v = p == 0 ? x : y;
    return {v.data() + l * n_bins, n_bins};
  }
};

// Correlated dual-polarisation training pair. Symbol content over the occupied
// band: first symbol (A, A), second symbol (A, -A), with A a constant-amplitude
// pseudo-random QPSK sequence. The sign structure makes the per-subcarrier 2x2
// channel estimate closed-form.
struct TrainingPair {
  std::vector<cplx> a;

  // Content of training symbol `which` (0 or 1) on polarisation `p`.
  cplx content(int p, int which, std::size_t pos) const {
    return (p == 1 && which == 1) ? -a[pos] : a[pos];
  }
};

}  // namespace cofdm
