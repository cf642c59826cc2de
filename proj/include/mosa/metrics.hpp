// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "mosa/model.hpp"
#include "mosa/world.hpp"

namespace mosa::metrics {

using world::Point;

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mean Euclidean distance over all steps.
double ade(std::span<const Point> pred, std::span<const Point> gt);
/// Euclidean distance at the last step.
double fde(std::span<const Point> pred, std::span<const Point> gt);

enum class Which { ADE, FDE };

struct Best {
  double value;
  std::size_t index;  // lowest index among ties
};

/// Minimum of the chosen metric over the first `k` hypotheses (all if k == 0).
Best topk_min(const net::Hypotheses& hypotheses, std::span<const Point> gt, Which which,
              std::size_t k = 0);

/// Means over samples. ade/fde are those of hypothesis 0.
struct EvalReport {
  double ade = 0.0;
  double fde = 0.0;
  double topk_ade = 0.0;
  double topk_fde = 0.0;
  std::size_t n_samples = 0;
  std::size_t k = 0;
  bool operator==(const EvalReport&) const = default;
};

/// Evaluates the model on every sample using its first `k` hypotheses.
/// Batches are spread over OpenMP threads; per-sample results are reduced in
/// sample order, so the report does not depend on the thread count.
EvalReport evaluate(const net::Model& model, const world::Dataset& data, std::size_t k,
                    std::size_t batch_size = 64);

/// Single-threaded, one sample at a time. Reference for `evaluate`.
EvalReport evaluate_serial(const net::Model& model, const world::Dataset& data, std::size_t k);

/// Top-k error of the pretrained model with any attached branches removed.
EvalReport generalization_error(const net::Model& checkpoint, const world::Dataset& target_test,
                                std::size_t k);

}  // namespace mosa::metrics
