#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "cofdm/iqfile.hpp"

using namespace cofdm;

TEST(IqFile, HeaderLayoutIsPinned) {
  IqStream s;
  s.sample_rate_hz = 40e9;
  s.x = {{1.5, -2.5}, {0.25, 0.75}};
  s.y = {{-1.0, 0.0}, {0.0, 1.0}};
  const std::string path = "cofdm_test_dump.iq";
  write_iq_dump(s, path);

  std::ifstream f(path, std::ios::binary);
  char buf[32 + 4 * 16];
  f.read(buf, sizeof buf);
  ASSERT_TRUE(bool(f));

  EXPECT_EQ(std::memcmp(buf, "IQS1", 4), 0);
  std::uint32_t ver;
  std::memcpy(&ver, buf + 4, 4);
  EXPECT_EQ(ver, 1u);
  double rate;
  std::memcpy(&rate, buf + 8, 8);
  EXPECT_DOUBLE_EQ(rate, 40e9);
  std::uint64_t len;
  std::memcpy(&len, buf + 16, 8);
  EXPECT_EQ(len, 2u);
  for (int i = 24; i < 32; ++i) EXPECT_EQ(buf[i], 0);  // reserved

  // Payload: x then y, interleaved I,Q doubles.
  double v[8];
  std::memcpy(v, buf + 32, sizeof v);
  EXPECT_DOUBLE_EQ(v[0], 1.5);
  EXPECT_DOUBLE_EQ(v[1], -2.5);
  EXPECT_DOUBLE_EQ(v[4], -1.0);
  std::remove(path.c_str());
}

TEST(IqFile, RoundTripExact) {
  IqStream s;
  s.sample_rate_hz = 12345.5;
  Rng rng(1);
  s.x.resize(333);
  s.y.resize(333);
  for (auto& v : s.x) v = rng.cgaussian();
  for (auto& v : s.y) v = rng.cgaussian();
  const std::string path = "cofdm_test_dump2.iq";
  write_iq_dump(s, path);
  const IqStream back = read_iq_dump(path);
  EXPECT_EQ(back.sample_rate_hz, s.sample_rate_hz);
  EXPECT_EQ(back.x, s.x);
  EXPECT_EQ(back.y, s.y);
  std::remove(path.c_str());
}

TEST(IqFile, BadMagicRejected) {
  const std::string path = "cofdm_test_dump3.iq";
  std::ofstream f(path, std::ios::binary);
  f << "JUNKJUNKJUNKJUNKJUNKJUNKJUNKJUNK";
  f.close();
  EXPECT_THROW(read_iq_dump(path), std::runtime_error);
  std::remove(path.c_str());
}
