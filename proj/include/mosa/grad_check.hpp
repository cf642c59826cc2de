// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mosa/tape.hpp"

namespace mosa::diff {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor for the relative error, so entries whose true
  /// gradient is ~0 are judged on absolute error instead. Scaled by
  /// max(1, |loss|) at the unperturbed point.
  double denominator_floor = 1e-6;
  /// 0 checks every entry; otherwise a seeded subset of this many per param.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string param;
  std::size_t checked = 0;
  /// Entries whose +h/-h evaluations took different branches (ReLU mask or
  /// best-mode choice changed), where a central difference is meaningless.
  std::size_t skipped_at_kink = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double max_rel_error = 0.0;
  bool non_finite = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  double max_rel_error() const;
  bool passed() const;
  std::string summary() const;
};

/// Builds a scalar loss on a fresh tape.
using LossBuilder = std::function<Var(Tape&)>;

/// Relative error |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Compares analytic gradients of `loss` for each trainable param against
/// central differences (f(x+h) - f(x-h)) / 2h. Param values are restored.
/// Entries whose perturbed evaluations disagree on the tape's branch
/// signature are skipped and counted.
GradCheckReport grad_check(const LossBuilder& loss, const std::vector<Param*>& params,
                           const GradCheckOptions& options = {});

}  // namespace mosa::diff
