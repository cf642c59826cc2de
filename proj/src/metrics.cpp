// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace mosa::metrics {

namespace {

void check_lengths(std::span<const Point> pred, std::span<const Point> gt, const char* what) {
  if (pred.size() != gt.size()) {
    throw MetricError(std::string(what) + ": prediction has " + std::to_string(pred.size()) +
                      " points, ground truth " + std::to_string(gt.size()));
  }
  if (pred.empty()) throw MetricError(std::string(what) + ": empty trajectory");
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct SampleScore {
  double ade, fde, topk_ade, topk_fde;
};

SampleScore score(const net::Hypotheses& hyps, std::span<const Point> gt, std::size_t k) {
  return {ade(hyps[0], gt), fde(hyps[0], gt), topk_min(hyps, gt, Which::ADE, k).value,
          topk_min(hyps, gt, Which::FDE, k).value};
}

EvalReport reduce(const std::vector<SampleScore>& scores, std::size_t k) {
  EvalReport r;
  r.n_samples = scores.size();
  r.k = k;
  for (const auto& s : scores) {
    r.ade += s.ade;
    r.fde += s.fde;
    r.topk_ade += s.topk_ade;
    r.topk_fde += s.topk_fde;
  }
  const double n = static_cast<double>(scores.size());
  r.ade /= n;
  r.fde /= n;
  r.topk_ade /= n;
  r.topk_fde /= n;
  return r;
}

void check_eval_args(const net::Model& model, const world::Dataset& data, std::size_t k) {
  if (data.samples.empty()) throw MetricError("evaluate: empty dataset");
  if (k == 0 || k > model.config.k_modes) {
    throw MetricError("evaluate: k must be in [1, " + std::to_string(model.config.k_modes) + "]");
  }
}

}  // namespace

double ade(std::span<const Point> pred, std::span<const Point> gt) {
  check_lengths(pred, gt, "ade");
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) total += distance(pred[t], gt[t]);
  return total / static_cast<double>(pred.size());
}

double fde(std::span<const Point> pred, std::span<const Point> gt) {
  check_lengths(pred, gt, "fde");
  return distance(pred.back(), gt.back());
}

Best topk_min(const net::Hypotheses& hypotheses, std::span<const Point> gt, Which which,
              std::size_t k) {
  if (hypotheses.empty()) throw MetricError("topk_min: no hypotheses");
  const std::size_t limit = k == 0 ? hypotheses.size() : k;
  if (limit > hypotheses.size()) {
    throw MetricError("topk_min: k = " + std::to_string(k) + " exceeds " +
                      std::to_string(hypotheses.size()) + " hypotheses");
  }
  Best best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t m = 0; m < limit; ++m) {
    const double v = which == Which::ADE ? ade(hypotheses[m], gt) : fde(hypotheses[m], gt);
    if (v < best.value) best = {v, m};
  }
  return best;
}

EvalReport evaluate(const net::Model& model, const world::Dataset& data, std::size_t k,
                    std::size_t batch_size) {
  check_eval_args(model, data, k);
  if (batch_size == 0) throw MetricError("evaluate: batch_size must be positive");
  const std::size_t n = data.samples.size();
  const auto chunks = static_cast<std::int64_t>((n + batch_size - 1) / batch_size);
  std::vector<SampleScore> scores(n);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t chunk = 0; chunk < chunks; ++chunk) {
    const std::size_t begin = static_cast<std::size_t>(chunk) * batch_size;
    const std::size_t end = std::min(n, begin + batch_size);
    std::vector<std::size_t> indices;
    for (std::size_t i = begin; i < end; ++i) indices.push_back(i);
    const net::Batch batch = net::make_batch(data, indices, model.config);
    const diff::Tensor pred = net::predict(model, batch);
    for (std::size_t row = 0; row < indices.size(); ++row) {
      const auto hyps = net::unpack(pred, row, model.config);
      scores[begin + row] = score(hyps, data.samples[begin + row].future, k);
    }
  }
  return reduce(scores, k);
}

EvalReport evaluate_serial(const net::Model& model, const world::Dataset& data, std::size_t k) {
  check_eval_args(model, data, k);
  std::vector<SampleScore> scores;
  scores.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const std::size_t idx[] = {i};
    const diff::Tensor pred = net::predict(model, net::make_batch(data, idx, model.config));
    scores.push_back(score(net::unpack(pred, 0, model.config), data.samples[i].future, k));
  }
  return reduce(scores, k);
}

EvalReport generalization_error(const net::Model& checkpoint, const world::Dataset& target_test,
                                std::size_t k) {
  net::Model plain = checkpoint;
  plain.adapters.clear();
  plain.residuals.clear();
  plain.adapter_spec.reset();
  return evaluate(plain, target_test, k);
}

}  // namespace mosa::metrics
