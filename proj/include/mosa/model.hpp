// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mosa/tape.hpp"
#include "mosa/tensor.hpp"
#include "mosa/world.hpp"

namespace mosa::net {

using diff::Param;
using diff::Tape;
using diff::Tensor;
using diff::Var;

/// Which encoder/decoder block a parameter belongs to.
enum class ModuleTag : char { Scene = 'S', Agent = 'A', Fusion = 'F', Decoder = 'D' };

ModuleTag tag_of(const std::string& param_name);
std::string to_string(ModuleTag tag);
/// Parses "S", "A", "F" or "D".
ModuleTag parse_tag(const std::string& text);

struct ModelConfig {
  std::size_t grid_h = 16;
  std::size_t grid_w = 16;
  std::size_t n_classes = world::kNumClasses;
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t d_model = 64;
  std::size_t k_modes = 5;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

/// A dense map in the model. Bias is empty for the attention projections.
struct LinearLayer {
  std::string weight;
  std::string bias;
  ModuleTag tag;
  std::size_t in;
  std::size_t out;
};

/// Every linear map of the architecture, in forward order.
std::vector<LinearLayer> linear_layers(const ModelConfig& config);

/// Low-rank residual beside a frozen weight: out += B (A h).
struct AdapterPair {
  std::string base_name;
  Param a;  // r x d_in
  Param b;  // d_out x r
};

/// Full-rank residual beside a frozen weight: out += P h.
struct ParallelResidual {
  std::string base_name;
  Param p;  // d_out x d_in
};

struct AdapterSpec {
  std::size_t rank = 3;
  std::vector<std::string> targets;
  double init_std = 0.02;
  std::uint64_t seed = 0;
  bool operator==(const AdapterSpec&) const = default;
};

/// Base parameters plus whatever residual branches are attached.
struct Model {
  ModelConfig config;
  std::map<std::string, Param> params;
  std::optional<AdapterSpec> adapter_spec;
  std::map<std::string, AdapterPair> adapters;      // keyed by base weight name
  std::map<std::string, ParallelResidual> residuals;  // keyed by base weight name

  Param& param(const std::string& name);
  const Param& param(const std::string& name) const;

  /// All Params including adapter and residual matrices, in a stable order.
  std::vector<Param*> all_params();
  std::vector<const Param*> all_params() const;
  std::vector<Param*> trainable_params();
  std::size_t count_trainable() const;
  void zero_grad();
};

/// Fresh model with seeded initialization (He-normal for ReLU blocks,
/// 1/sqrt(d) for attention, unit gamma, zero beta and biases).
Model init_model(const ModelConfig& config);

/// Inputs of a batch packed as tensors.
struct Batch {
  Tensor scene;    // B x (H*W*C) one-hot
  Tensor motion;   // B x (t_obs-1)*2 offsets
  Tensor anchor;   // B x 2 last observed point
  Tensor future;   // B x t_pred*2
  std::size_t size() const { return anchor.rows(); }
};

Tensor one_hot_scene(const world::SceneGrid& grid, const ModelConfig& config);
Tensor motion_offsets(std::span<const world::Point> past, const ModelConfig& config);

/// Throws std::invalid_argument when a sample does not fit the config or its
/// scene is missing.
Batch make_batch(const world::Dataset& data, std::span<const std::size_t> indices,
                 const ModelConfig& config);
Batch make_batch(const std::vector<world::Sample>& samples,
                 const std::map<std::string, world::SceneGrid>& scenes,
                 const ModelConfig& config);

/// Maps a parameter name to a tape variable. Training binds Params (so
/// backward reaches them); inference binds constants.
using Binder = std::function<Var(const Param&)>;

Binder bind_params(Tape& tape, Model& model);
Binder bind_constants(Tape& tape);

/// The individual stages. Each returns a B x width tensor on the tape.
Var encode_scene(Tape& tape, const Model& model, const Binder& bind, Var scene);
Var encode_motion(Tape& tape, const Model& model, const Binder& bind, Var offsets);
Var fuse(Tape& tape, const Model& model, const Binder& bind, Var scene_emb, Var motion_emb);
/// Returns B x (k_modes * t_pred * 2) absolute positions.
Var decode(Tape& tape, const Model& model, const Binder& bind, Var fused, const Tensor& anchor);

/// W h (+ bias) + B (A h), as two rank-r products; BA is never formed.
Var adapted_linear(Tape& tape, Var weight, std::optional<Var> bias, Var a, Var b, Var input);

/// Applies the named dense map, including any attached adapter or residual.
Var apply_layer(Tape& tape, const Model& model, const Binder& bind, const LinearLayer& layer,
                Var input);

/// Full forward pass.
Var forward(Tape& tape, const Model& model, const Binder& bind, const Batch& batch);

/// Predictions as a plain tensor (B x k_modes*t_pred*2), no gradients.
Tensor predict(const Model& model, const Batch& batch);

/// Hypotheses of one sample: k_modes x t_pred points.
using Hypotheses = std::vector<std::vector<world::Point>>;
Hypotheses unpack(const Tensor& predictions, std::size_t row, const ModelConfig& config);

}  // namespace mosa::net
