// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mosa/metrics.hpp"
#include "mosa/rng.hpp"

namespace mosa::train {

double default_lr(adapt::Method method) {
  switch (method) {
    case adapt::Method::FT: return 5e-5;
    case adapt::Method::ET: return 5e-4;
    case adapt::Method::PA: return 5e-5;
    case adapt::Method::NORM: return 1e-4;
    case adapt::Method::MOSA: return 5e-3;
  }
  return 1e-3;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train: lr must be positive");
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (patience == 0) throw std::invalid_argument("train: patience must be positive");
  if (max_epochs > 0 && patience > max_epochs) {
    throw std::invalid_argument("train: patience must not exceed max_epochs");
  }
  if (rank == 0) throw std::invalid_argument("train: rank must be positive");
}

void adam_step(const std::vector<Param*>& params, AdamState& state, double lr,
               const AdamOptions& o) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (Param* p : params) {
    if (!p->trainable) continue;
    auto [m_it, m_new] = state.first.try_emplace(p->name, p->value.shape());
    auto [v_it, v_new] = state.second.try_emplace(p->name, p->value.shape());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape() != p->value.shape() || v.shape() != p->value.shape()) {
      throw TrainError("adam: state for '" + p->name + "' has the wrong shape");
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p->value[i] -= lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

double variety_loss(const net::Hypotheses& hypotheses, const std::vector<world::Point>& future) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : hypotheses) {
    if (h.size() != future.size()) throw std::invalid_argument("variety_loss: length mismatch");
    double err = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double dx = h[t].x - future[t].x;
      const double dy = h[t].y - future[t].y;
      err += dx * dx + dy * dy;
    }
    best = std::min(best, err / static_cast<double>(h.size()));
  }
  return best;
}

double train_step(net::Model& model, const net::Batch& batch, AdamState& state, double lr) {
  model.zero_grad();
  diff::Tape tape;
  const diff::Var pred = net::forward(tape, model, net::bind_params(tape, model), batch);
  const diff::Var loss =
      diff::variety_loss(tape, pred, batch.future, model.config.k_modes, model.config.t_pred);
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) return value;
  tape.backward(loss);
  adam_step(model.trainable_params(), state, lr);
  return value;
}

double dataset_loss(const net::Model& model, const world::Dataset& data) {
  constexpr std::size_t kChunk = 64;
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.samples.size(); begin += kChunk) {
    const std::size_t end = std::min(data.samples.size(), begin + kChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const net::Batch batch = net::make_batch(data, idx, model.config);
    diff::Tape tape;
    const diff::Var pred = net::forward(tape, model, net::bind_constants(tape), batch);
    const diff::Var loss =
        diff::variety_loss(tape, pred, batch.future, model.config.k_modes, model.config.t_pred);
    total += tape.value(loss)[0] * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(data.samples.size());
}

namespace {

EpochRecord validate_epoch(const net::Model& model, const world::Dataset& val, std::size_t epoch,
                           double train_loss) {
  const auto report = metrics::evaluate(model, val, model.config.k_modes);
  return {epoch, train_loss, report.topk_ade, report.topk_fde};
}

/// Shared epoch loop. `history` may already contain an epoch-0 record.
void run_epochs(TrainResult& result, net::Model& model, const world::Dataset& train,
                const world::Dataset& val, const TrainConfig& config) {
  AdamState adam;
  SplitMix64 rng(config.seed);
  std::vector<std::size_t> order(train.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_fde = result.history.empty() ? std::numeric_limits<double>::infinity()
                                           : result.history.front().val_fde;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const net::Batch batch = net::make_batch(train, idx, model.config);
      const double loss = train_step(model, batch, adam, config.lr);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch starting at " << begin
            << " (lr " << config.lr << ", method " << adapt::to_string(config.method) << ")";
        throw TrainError(msg.str());
      }
      loss_sum += loss * static_cast<double>(idx.size());
    }
    const EpochRecord rec =
        validate_epoch(model, val, epoch, loss_sum / static_cast<double>(order.size()));
    result.history.push_back(rec);
    result.epochs_run = epoch;
    if (rec.val_fde < best_fde) {
      best_fde = rec.val_fde;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
}

}  // namespace

TrainResult pretrain(const net::Model& init, const world::Dataset& train,
                     const world::Dataset& val, const TrainConfig& config) {
  config.validate();
  if (train.samples.empty() || val.samples.empty()) {
    throw std::invalid_argument("pretrain: train and validation sets must be non-empty");
  }
  net::Model model = init;
  for (auto& [name, p] : model.params) p.trainable = true;
  TrainResult result;
  result.model = model;
  run_epochs(result, model, train, val, config);
  return result;
}

TrainResult adapt(const net::Model& checkpoint, const world::Dataset& target,
                  const world::Dataset& val, const TrainConfig& config) {
  config.validate();
  if (target.samples.empty()) throw std::invalid_argument("adapt: N_target must be at least 1");
  if (val.samples.empty()) throw std::invalid_argument("adapt: empty validation set");
  net::Model model = adapt::prepare(checkpoint, config.method, config.mask, config.rank,
                                    config.init_std, config.seed);
  TrainResult result;
  result.model = model;
  result.history.push_back(validate_epoch(model, val, 0, dataset_loss(model, target)));
  run_epochs(result, model, target, val, config);
  return result;
}

world::Dataset subsample(const world::Dataset& data, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > data.samples.size()) {
    throw std::invalid_argument("subsample: need 1.." + std::to_string(data.samples.size()) +
                                " samples, asked for " + std::to_string(n));
  }
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(order[i], order[i + rng.uniform_index(order.size() - i)]);
  }
  world::Dataset out;
  out.style_tag = data.style_tag;
  out.scenes = data.scenes;
  for (std::size_t i = 0; i < n; ++i) out.samples.push_back(data.samples[order[i]]);
  return out;
}

}  // namespace mosa::train
