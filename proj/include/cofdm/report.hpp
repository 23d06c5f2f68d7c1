#pragma once
//
// Per-run scorecard shared by the receiver pipeline and the sweep harness.
//
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace cofdm {

struct RunReport {
  double ber = 0.0;
  std::uint64_t bit_errors = 0;
  std::uint64_t bits_counted = 0;
  double evm_db = -std::numeric_limits<double>::infinity();
  double gamma_true = 0.0;
  double gamma_hat = 0.0;
  // |gamma_hat - gamma_true| / |gamma_true|; NaN when gamma_true == 0.
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> flags;

  bool flagged() const { return !flags.empty(); }
};

}  // namespace cofdm
