#pragma once
//
// Binary de Bruijn sequence generator (FKM necklace concatenation) plus a
// seeded rotation. Rotating a de Bruijn cycle preserves the property that
// every length-`order` word appears exactly once cyclically, so the seed
// selects among distinct-but-equivalent test patterns.
//
#include <algorithm>
#include <cstdint>
#include <vector>

#include "common.hpp"

namespace cofdm {

inline std::vector<std::uint8_t> debruijn_bits(unsigned order, std::uint64_t seed) {
  if (order < 1 || order > 24) fail_param("debruijn_bits: order must be in [1, 24]");

  std::vector<std::uint8_t> seq;
  seq.reserve(std::size_t(1) << order);
  std::vector<std::uint8_t> a(2 * std::size_t(order) + 2, 0);

  // Fredricksen-Kessler-Maiorana: concatenate Lyndon words whose length
  // divides `order`. Recursion depth is bounded by order+1.
  auto db = [&](auto&& self, unsigned t, unsigned p) -> void {
    if (t > order) {
      if (order % p == 0)
        for (unsigned j = 1; j <= p; ++j) seq.push_back(a[j]);
      return;
    }
    a[t] = a[t - p];
    self(self, t + 1, p);
    for (std::uint8_t v = a[t - p] + 1; v < 2; ++v) {
      a[t] = v;
      self(self, t + 1, t);
    }
  };
  db(db, 1, 1);

  Rng rng(seed, 0x5eed);
  const std::size_t rot = std::size_t(rng.next_u64() % seq.size());
  std::rotate(seq.begin(), seq.begin() + long(rot), seq.end());
  return seq;
}

// First `count` bits of a de Bruijn cycle just big enough to supply them.
inline std::vector<std::uint8_t> test_pattern_bits(std::size_t count, std::uint64_t seed) {
  unsigned order = 4;
  while ((std::size_t(1) << order) < count && order < 24) ++order;
  auto seq = debruijn_bits(order, seed);
  if (seq.size() < count) fail_param("test_pattern_bits: count exceeds 2^24");
  seq.resize(count);
  return seq;
}

}  // namespace cofdm
