// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace mosa {

/// splitmix64 generator. Every random quantity in the project is derived
/// from this so that datasets and initializations are reproducible across
/// implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Box-Muller; consumes two u64 draws per call, no caching of the pair.
  double gaussian(double mean = 0.0, double stddev = 1.0);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Mixes a base seed with a stream id so unrelated consumers of one seed
/// do not share draws.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace mosa
