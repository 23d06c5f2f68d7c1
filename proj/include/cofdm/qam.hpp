#pragma once
//
// Gray-coded 16-QAM. Bit pairs map per axis as 00 -> -3, 01 -> -1, 11 -> +1,
// 10 -> +3, scaled by 1/sqrt(10) for unit mean symbol energy. The first two
// bits of a word drive I, the last two drive Q.
//
#include <array>
#include <cstdint>

#include "common.hpp"

namespace cofdm {

inline constexpr double qam16_scale = 0.31622776601683794;  // 1/sqrt(10)

inline double qam16_axis_level(unsigned gray_pair) {
  switch (gray_pair & 3u) {
    case 0b00: return -3.0;
    case 0b01: return -1.0;
    case 0b11: return +1.0;
    default:   return +3.0;  // 0b10
  }
}

inline unsigned qam16_axis_bits(double level) {
  // Hard decision with thresholds at -2, 0, +2 (unscaled levels).
  if (level < -2.0) return 0b00;
  if (level < 0.0)  return 0b01;
  if (level < 2.0)  return 0b11;
  return 0b10;
}

// word packs the transmitted bit sequence MSB-first: bit i of the sequence is
// (word >> (3 - i)) & 1.
inline cplx qam16_map_word(unsigned word) {
  const unsigned i_pair = (word >> 2) & 3u;
  const unsigned q_pair = word & 3u;
  return {qam16_axis_level(i_pair) * qam16_scale,
          qam16_axis_level(q_pair) * qam16_scale};
}

inline cplx qam16_map(const std::uint8_t* bits4) {
  const unsigned word = unsigned(bits4[0]) << 3 | unsigned(bits4[1]) << 2 |
                        unsigned(bits4[2]) << 1 | unsigned(bits4[3]);
  return qam16_map_word(word);
}

inline unsigned qam16_demap_word(cplx symbol) {
  const unsigned i_pair = qam16_axis_bits(symbol.real() / qam16_scale);
  const unsigned q_pair = qam16_axis_bits(symbol.imag() / qam16_scale);
  return (i_pair << 2) | q_pair;
}

inline void qam16_demap(cplx symbol, std::uint8_t* bits4) {
  const unsigned word = qam16_demap_word(symbol);
  bits4[0] = (word >> 3) & 1u;
  bits4[1] = (word >> 2) & 1u;
  bits4[2] = (word >> 1) & 1u;
  bits4[3] = word & 1u;
}

}  // namespace cofdm
