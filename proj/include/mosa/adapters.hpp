// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "mosa/model.hpp"

namespace mosa::adapt {

using net::AdapterPair;
using net::AdapterSpec;
using net::Model;
using net::ModuleTag;

class AdapterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Which parameters an adaptation run may change.
enum class Method { FT, ET, PA, NORM, MOSA };

std::string to_string(Method m);
Method parse_method(const std::string& text);

/// Subset of {S, A, F}; empty means "every adaptable encoder layer".
using ModularMask = std::set<ModuleTag>;

std::string mask_to_string(const ModularMask& mask);  // "all", "A", "S+F", ...
ModularMask parse_mask(const std::string& text);

/// Weight names adapted by MOSA/PA under a mask: the dense maps of the
/// tagged encoder blocks, and for F the fused projection plus attention
/// query and value maps. The decoder is never a target.
std::vector<std::string> default_targets(const net::ModelConfig& config,
                                         const ModularMask& mask);

/// Attaches zero-initialized low-rank pairs to each target and freezes the
/// target weights. A is Gaussian(0, init_std^2), B is exactly zero, so the
/// returned model computes the same outputs as `base`.
Model inject(const Model& base, const AdapterSpec& spec);

/// Attaches zero-initialized full-rank residuals to each target and freezes
/// the target weights.
Model inject_parallel(const Model& base, const std::vector<std::string>& targets);

using net::adapted_linear;

/// Folds every adapter (W + BA) and residual (W + P) into its base weight.
/// The result has no branches attached and every parameter trainable.
Model merge(const Model& adapted);

struct TargetCount {
  std::string name;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::size_t adapter = 0;  // r * (d_in + d_out)
  std::size_t base = 0;     // weight + bias entries
};

struct AdapterCount {
  std::vector<TargetCount> targets;
  std::size_t total_adapter = 0;
  std::size_t total_base = 0;
  double ratio() const {
    return total_base == 0 ? 0.0
                           : static_cast<double>(total_adapter) / static_cast<double>(total_base);
  }
};

AdapterCount count_adapter_params(const AdapterSpec& spec, const net::ModelConfig& config);

/// Adapter size relative to a single dense layer with bias.
TargetCount layer_count(std::size_t d_in, std::size_t d_out, std::size_t rank, bool bias = true);

/// Row reduction with partial pivoting; counts pivots larger than
/// rel_tol * (largest absolute entry).
std::size_t numeric_rank(const diff::Tensor& matrix, double rel_tol = 1e-9);

/// Numeric rank of B*A.
std::size_t verify_rank(const AdapterPair& pair, double rel_tol = 1e-9);

/// Returns a copy of `base` configured for `method`: branches attached and
/// trainable flags set. Throws AdapterError if nothing ends up trainable.
Model prepare(const Model& base, Method method, const ModularMask& mask, std::size_t rank,
              double init_std, std::uint64_t seed);

/// Names of the parameters `method` trains (including branch matrices).
std::set<std::string> select_trainables(const Model& base, Method method,
                                        const ModularMask& mask, std::size_t rank = 3,
                                        double init_std = 0.02, std::uint64_t seed = 0);

}  // namespace mosa::adapt
