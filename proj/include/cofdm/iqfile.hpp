#pragma once
//
// Raw sample dump. 32-byte header: magic "IQS1", u32 version, f64 sample
// rate, u64 per-polarisation sample count, 8 reserved zero bytes. Payload is
// little-endian f64 interleaved I,Q for the full x-polarisation stream, then
// the y-polarisation stream.
//
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "common.hpp"
#include "stream.hpp"

namespace cofdm {

static_assert(std::endian::native == std::endian::little,
              "iq dump assumes a little-endian host");

inline constexpr std::uint32_t iq_dump_version = 1;

inline void write_iq_dump(const IqStream& s, const std::string& path) {
  s.check();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_iq_dump: cannot open " + path);

  char header[32] = {};
  std::memcpy(header, "IQS1", 4);
  const std::uint32_t ver = iq_dump_version;
  std::memcpy(header + 4, &ver, 4);
  const double rate = s.sample_rate_hz;
  std::memcpy(header + 8, &rate, 8);
  const std::uint64_t len = s.size();
  std::memcpy(header + 16, &len, 8);
  f.write(header, sizeof header);

  for (int p = 0; p < 2; ++p) {
    for (const cplx& v : s.pol(p)) {
      const double iq[2] = {v.real(), v.imag()};
      f.write(reinterpret_cast<const char*>(iq), sizeof iq);
    }
  }
  if (!f) throw std::runtime_error("write_iq_dump: write failed for " + path);
}

inline IqStream read_iq_dump(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_iq_dump: cannot open " + path);

  char header[32] = {};
  f.read(header, sizeof header);
  if (!f || std::memcmp(header, "IQS1", 4) != 0)
    throw std::runtime_error("read_iq_dump: bad magic in " + path);
  std::uint32_t ver = 0;
  std::memcpy(&ver, header + 4, 4);
  if (ver != iq_dump_version) throw std::runtime_error("read_iq_dump: unsupported version");

  IqStream s;
  std::memcpy(&s.sample_rate_hz, header + 8, 8);
  std::uint64_t len = 0;
  std::memcpy(&len, header + 16, 8);

  for (int p = 0; p < 2; ++p) {
    auto& v = s.pol_mut(p);
    v.resize(len);
    for (std::uint64_t i = 0; i < len; ++i) {
      double iq[2];
      f.read(reinterpret_cast<char*>(iq), sizeof iq);
      v[i] = {iq[0], iq[1]};
    }
  }
  if (!f) throw std::runtime_error("read_iq_dump: truncated file " + path);
  return s;
}

}  // namespace cofdm
