// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosa/adapters.hpp"
#include "mosa/model.hpp"
#include "mosa/world.hpp"

namespace mosa::train {

using diff::Param;
using diff::Tensor;

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Default adaptation learning rates per method.
double default_lr(adapt::Method method);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 10;
  std::size_t max_epochs = 100;
  std::size_t patience = 30;
  std::uint64_t seed = 0;
  adapt::Method method = adapt::Method::MOSA;
  adapt::ModularMask mask;
  std::size_t rank = 3;
  double init_std = 0.02;

  void validate() const;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, Tensor> first;
  std::map<std::string, Tensor> second;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of every trainable param from its grad.
/// Non-trainable params are skipped entirely.
void adam_step(const std::vector<Param*>& params, AdamState& state, double lr,
               const AdamOptions& options = {});

/// Min-over-modes mean squared step error of one prediction row, as in
/// training. Used for reporting; training goes through the tape op.
double variety_loss(const net::Hypotheses& hypotheses, const std::vector<world::Point>& future);

/// Forward + backward + Adam on one batch; returns the batch loss.
double train_step(net::Model& model, const net::Batch& batch, AdamState& state, double lr);

/// Mean variety loss over a dataset, no updates.
double dataset_loss(const net::Model& model, const world::Dataset& data);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 = before any update
  double train_loss = 0.0;
  double val_ade = 0.0;  // top-k
  double val_fde = 0.0;  // top-k
};

struct TrainResult {
  net::Model model;  // best by validation top-k FDE
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

/// Trains all parameters on the source data. History has one row per
/// completed epoch (none for max_epochs == 0, which returns `init`).
TrainResult pretrain(const net::Model& init, const world::Dataset& train,
                     const world::Dataset& val, const TrainConfig& config);

/// Adapts a checkpoint to target data with the configured method. History
/// starts with an epoch-0 row for the unadapted model; the returned model is
/// the best row, which may be epoch 0.
TrainResult adapt(const net::Model& checkpoint, const world::Dataset& target,
                  const world::Dataset& val, const TrainConfig& config);

/// Deterministic subset of `n` samples (scenes copied over).
world::Dataset subsample(const world::Dataset& data, std::size_t n, std::uint64_t seed);

}  // namespace mosa::train
