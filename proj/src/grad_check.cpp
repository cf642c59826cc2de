// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mosa/rng.hpp"

namespace mosa::diff {

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

bool GradCheckReport::passed() const {
  return std::none_of(entries.begin(), entries.end(), [this](const GradCheckEntry& e) {
    return e.non_finite || e.max_rel_error > tolerance;
  });
}

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  for (const auto& e : entries) {
    out << e.param << ": checked " << e.checked << " (" << e.skipped_at_kink
        << " at kinks), max rel err " << e.max_rel_error
        << " (analytic " << e.worst_analytic << ", numeric " << e.worst_numeric << " at "
        << e.worst_index << ")" << (e.non_finite ? " NON-FINITE" : "") << "\n";
  }
  return out.str();
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

struct Evaluation {
  double loss;
  std::uint64_t branches;
};

Evaluation evaluate(const LossBuilder& loss) {
  Tape tape;
  const double value = tape.value(loss(tape))[0];
  return {value, tape.branch_signature()};
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, const std::vector<Param*>& params,
                           const GradCheckOptions& options) {
  if (options.step < 1e-7 || options.step > 1e-3) {
    throw std::invalid_argument("grad_check: step must lie in [1e-7, 1e-3]");
  }
  for (Param* p : params) p->zero_grad();
  std::uint64_t base_branches = 0;
  double base_loss = 0.0;
  {
    Tape tape;
    const Var out = loss(tape);
    base_loss = tape.value(out)[0];
    tape.backward(out);
    base_branches = tape.branch_signature();
  }
  // Round-off in f(x +- h) grows with |f|, so the floor does too.
  const double floor =
      options.denominator_floor * std::max(1.0, std::isfinite(base_loss) ? std::abs(base_loss) : 1.0);

  GradCheckReport report;
  report.tolerance = options.tolerance;
  SplitMix64 rng(options.seed);
  for (Param* p : params) {
    if (!p->trainable) continue;
    GradCheckEntry entry;
    entry.param = p->name;

    std::vector<std::size_t> indices(p->value.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_entries_per_param > 0 && indices.size() > options.max_entries_per_param) {
      // Partial Fisher-Yates for a seeded subset.
      for (std::size_t i = 0; i < options.max_entries_per_param; ++i) {
        std::swap(indices[i], indices[i + rng.uniform_index(indices.size() - i)]);
      }
      indices.resize(options.max_entries_per_param);
      std::sort(indices.begin(), indices.end());
    }

    for (std::size_t idx : indices) {
      const double original = p->value[idx];
      p->value[idx] = original + options.step;
      const Evaluation hi = evaluate(loss);
      p->value[idx] = original - options.step;
      const Evaluation lo = evaluate(loss);
      p->value[idx] = original;
      const double plus = hi.loss;
      const double minus = lo.loss;

      const double analytic = p->grad[idx];
      const double numeric = (plus - minus) / (2.0 * options.step);
      ++entry.checked;
      if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(analytic)) {
        entry.non_finite = true;
        entry.worst_index = idx;
        continue;
      }
      if (hi.branches != base_branches || lo.branches != base_branches) {
        ++entry.skipped_at_kink;
        continue;
      }
      const double err = relative_error(analytic, numeric, floor);
      if (err >= entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = idx;
        entry.worst_analytic = analytic;
        entry.worst_numeric = numeric;
      }
    }
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace mosa::diff
