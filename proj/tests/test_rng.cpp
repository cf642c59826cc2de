// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/rng.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

namespace mosa {
namespace {

// Reference values from tests/oracles/model_oracle.py.
TEST(SplitMix64, MatchesReferenceSequence) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next_u64(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(rng.next_u64(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(rng.next_u64(), 0x06c45d188009454fULL);
}

TEST(SplitMix64, GaussianMatchesReference) {
  SplitMix64 rng(42);
  EXPECT_DOUBLE_EQ(rng.gaussian(), 0.8822489062222688);
  EXPECT_DOUBLE_EQ(rng.gaussian(), -0.4508498757188601);
  EXPECT_DOUBLE_EQ(rng.gaussian(), 0.1883526341159315);
}

TEST(SplitMix64, GaussianConsumesTwoDraws) {
  SplitMix64 a(9);
  SplitMix64 b(9);
  a.gaussian();
  b.next_u64();
  b.next_u64();
  EXPECT_EQ(a.state(), b.state());
}

TEST(SplitMix64, UniformInUnitInterval) {
  SplitMix64 rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(SplitMix64, GaussianMoments) {
  SplitMix64 rng(5);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian(2.0, 0.5);
    s1 += g;
    s2 += g * g;
  }
  const double mean = s1 / n;
  EXPECT_NEAR(mean, 2.0, 0.01);
  EXPECT_NEAR(std::sqrt(s2 / n - mean * mean), 0.5, 0.01);
}

TEST(DeriveSeed, MatchesReferenceAndSeparatesStreams) {
  EXPECT_EQ(derive_seed(7, 3), 11890610812480902339ULL);
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(1, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}

TEST(SplitMix64, UniformIndexCoversRange) {
  SplitMix64 rng(11);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
}

}  // namespace
}  // namespace mosa
