// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/rng.hpp"

#include <cmath>
#include <numbers>

namespace mosa {

std::uint64_t SplitMix64::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::size_t SplitMix64::uniform_index(std::size_t n) {
  // Modulo bias is below 2^-40 for every n used here.
  return static_cast<std::size_t>(next_u64() % n);
}

double SplitMix64::gaussian(double mean, double stddev) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 mixer(base ^ (stream * 0xd1b54a32d192ed03ULL));
  mixer.next_u64();
  return mixer.next_u64();
}

}  // namespace mosa
