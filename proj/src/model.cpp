// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mosa/rng.hpp"

namespace mosa::net {

namespace {

constexpr double kLayerNormEps = 1e-5;

}  // namespace

ModuleTag tag_of(const std::string& name) {
  if (name.size() < 2 || name[1] != '.') {
    throw std::invalid_argument("parameter '" + name + "' has no module tag");
  }
  return parse_tag(name.substr(0, 1));
}

std::string to_string(ModuleTag tag) { return std::string(1, static_cast<char>(tag)); }

ModuleTag parse_tag(const std::string& text) {
  if (text == "S") return ModuleTag::Scene;
  if (text == "A") return ModuleTag::Agent;
  if (text == "F") return ModuleTag::Fusion;
  if (text == "D") return ModuleTag::Decoder;
  throw std::invalid_argument("unknown module tag '" + text + "'");
}

void ModelConfig::validate() const {
  if (grid_h == 0 || grid_w == 0) throw std::invalid_argument("model: grid dims must be positive");
  if (n_classes == 0) throw std::invalid_argument("model: n_classes must be positive");
  if (t_obs < 2) throw std::invalid_argument("model: t_obs must be at least 2");
  if (t_pred == 0) throw std::invalid_argument("model: t_pred must be positive");
  if (d_model == 0 || d_model % 2 != 0) {
    throw std::invalid_argument("model: d_model must be positive and even");
  }
  if (k_modes == 0) throw std::invalid_argument("model: k_modes must be at least 1");
}

std::vector<LinearLayer> linear_layers(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  const std::size_t scene_in = c.grid_h * c.grid_w * c.n_classes;
  const std::size_t motion_in = (c.t_obs - 1) * 2;
  const std::size_t out = c.k_modes * c.t_pred * 2;
  return {
      {"S.fc1.weight", "S.fc1.bias", ModuleTag::Scene, scene_in, d},
      {"S.fc2.weight", "S.fc2.bias", ModuleTag::Scene, d, d},
      {"A.fc1.weight", "A.fc1.bias", ModuleTag::Agent, motion_in, d},
      {"A.fc2.weight", "A.fc2.bias", ModuleTag::Agent, d, d},
      {"F.attn.q.weight", "", ModuleTag::Fusion, d, d},
      {"F.attn.k.weight", "", ModuleTag::Fusion, d, d},
      {"F.attn.v.weight", "", ModuleTag::Fusion, d, d},
      {"F.attn.o.weight", "", ModuleTag::Fusion, d, d},
      {"F.fc.weight", "F.fc.bias", ModuleTag::Fusion, 2 * d, 2 * d},
      {"D.fc1.weight", "D.fc1.bias", ModuleTag::Decoder, 2 * d, 2 * d},
      {"D.fc2.weight", "D.fc2.bias", ModuleTag::Decoder, 2 * d, out},
  };
}

namespace {

LinearLayer layer_named(const Model& model, const std::string& weight) {
  for (auto& layer : linear_layers(model.config)) {
    if (layer.weight == weight) return layer;
  }
  throw std::invalid_argument("no linear layer with weight '" + weight + "'");
}

}  // namespace

Param& Model::param(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

const Param& Model::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::vector<Param*> Model::all_params() {
  std::vector<Param*> out;
  for (auto& [name, p] : params) out.push_back(&p);
  for (auto& [name, pair] : adapters) {
    out.push_back(&pair.a);
    out.push_back(&pair.b);
  }
  for (auto& [name, res] : residuals) out.push_back(&res.p);
  return out;
}

std::vector<const Param*> Model::all_params() const {
  std::vector<const Param*> out;
  for (const auto* p : const_cast<Model*>(this)->all_params()) out.push_back(p);
  return out;
}

std::vector<Param*> Model::trainable_params() {
  std::vector<Param*> out;
  for (Param* p : all_params()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

std::size_t Model::count_trainable() const {
  std::size_t total = 0;
  for (const Param* p : all_params()) {
    if (p->trainable) total += p->value.size();
  }
  return total;
}

void Model::zero_grad() {
  for (Param* p : all_params()) p->zero_grad();
}

Model init_model(const ModelConfig& config) {
  config.validate();
  Model model;
  model.config = config;
  std::uint64_t stream = 0;
  const auto gaussian_matrix = [&](std::size_t rows, std::size_t cols, double stddev) {
    SplitMix64 rng(derive_seed(config.seed, stream++));
    Tensor t({rows, cols});
    for (auto& v : t.values()) v = rng.gaussian(0.0, stddev);
    return t;
  };
  const auto add = [&model](const std::string& name, Tensor value) {
    model.params.emplace(name, Param(name, std::move(value)));
  };

  for (const auto& layer : linear_layers(config)) {
    double stddev = std::sqrt(2.0 / static_cast<double>(layer.in));  // He for ReLU inputs
    if (layer.tag == ModuleTag::Fusion && layer.bias.empty()) {
      stddev = 1.0 / std::sqrt(static_cast<double>(layer.in));
    } else if (layer.weight == "D.fc2.weight") {
      stddev = 1.0 / std::sqrt(static_cast<double>(layer.in));
    }
    add(layer.weight, gaussian_matrix(layer.out, layer.in, stddev));
    if (!layer.bias.empty()) add(layer.bias, Tensor({layer.out}));
  }
  for (const char* ln : {"S.ln1", "S.ln2", "A.ln1", "A.ln2"}) {
    Tensor gamma({config.d_model});
    gamma.fill(1.0);
    add(std::string(ln) + ".gamma", std::move(gamma));
    add(std::string(ln) + ".beta", Tensor({config.d_model}));
  }
  return model;
}

// ---- inputs ---------------------------------------------------------------

Tensor one_hot_scene(const world::SceneGrid& grid, const ModelConfig& config) {
  if (grid.height != config.grid_h || grid.width != config.grid_w) {
    throw std::invalid_argument("scene '" + grid.id + "' is " + std::to_string(grid.height) +
                                "x" + std::to_string(grid.width) + ", model expects " +
                                std::to_string(config.grid_h) + "x" +
                                std::to_string(config.grid_w));
  }
  Tensor out({1, grid.cells.size() * config.n_classes});
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (grid.cells[i] >= config.n_classes) {
      throw std::invalid_argument("scene '" + grid.id + "': class id " +
                                  std::to_string(grid.cells[i]) + " >= n_classes");
    }
    out[i * config.n_classes + grid.cells[i]] = 1.0;
  }
  return out;
}

Tensor motion_offsets(std::span<const world::Point> past, const ModelConfig& config) {
  if (past.size() != config.t_obs) {
    throw std::invalid_argument("past has " + std::to_string(past.size()) +
                                " points, model expects " + std::to_string(config.t_obs));
  }
  Tensor out({1, (config.t_obs - 1) * 2});
  for (std::size_t t = 0; t + 1 < past.size(); ++t) {
    out[2 * t] = past[t + 1].x - past[t].x;
    out[2 * t + 1] = past[t + 1].y - past[t].y;
  }
  return out;
}

namespace {

Batch pack(const std::vector<const world::Sample*>& samples,
           const std::map<std::string, world::SceneGrid>& scenes, const ModelConfig& config) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty batch");
  const std::size_t n = samples.size();
  const std::size_t scene_width = config.grid_h * config.grid_w * config.n_classes;
  Batch batch{Tensor({n, scene_width}), Tensor({n, (config.t_obs - 1) * 2}), Tensor({n, 2}),
              Tensor({n, config.t_pred * 2})};
  std::map<std::string, Tensor> encoded;
  for (std::size_t i = 0; i < n; ++i) {
    const world::Sample& s = *samples[i];
    auto it = encoded.find(s.scene_id);
    if (it == encoded.end()) {
      auto scene = scenes.find(s.scene_id);
      if (scene == scenes.end()) {
        throw std::invalid_argument("sample references missing scene '" + s.scene_id + "'");
      }
      it = encoded.emplace(s.scene_id, one_hot_scene(scene->second, config)).first;
    }
    std::copy(it->second.values().begin(), it->second.values().end(),
              batch.scene.values().begin() + static_cast<long>(i * scene_width));
    const Tensor off = motion_offsets(s.past, config);
    for (std::size_t k = 0; k < off.size(); ++k) batch.motion.at(i, k) = off[k];
    batch.anchor.at(i, 0) = s.past.back().x;
    batch.anchor.at(i, 1) = s.past.back().y;
    if (s.future.size() != config.t_pred) {
      throw std::invalid_argument("future has " + std::to_string(s.future.size()) +
                                  " points, model expects " + std::to_string(config.t_pred));
    }
    for (std::size_t t = 0; t < config.t_pred; ++t) {
      batch.future.at(i, 2 * t) = s.future[t].x;
      batch.future.at(i, 2 * t + 1) = s.future[t].y;
    }
  }
  return batch;
}

}  // namespace

Batch make_batch(const world::Dataset& data, std::span<const std::size_t> indices,
                 const ModelConfig& config) {
  std::vector<const world::Sample*> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(&data.samples.at(i));
  return pack(picked, data.scenes, config);
}

Batch make_batch(const std::vector<world::Sample>& samples,
                 const std::map<std::string, world::SceneGrid>& scenes,
                 const ModelConfig& config) {
  std::vector<const world::Sample*> picked;
  picked.reserve(samples.size());
  for (const auto& s : samples) picked.push_back(&s);
  return pack(picked, scenes, config);
}

// ---- forward ----------------------------------------------------------------

Binder bind_params(Tape& tape, Model& model) {
  (void)model;
  // The binder only ever receives Params owned by `model`, which the caller
  // holds mutably; backward accumulates into their grads.
  return [&tape](const Param& p) { return tape.param(const_cast<Param&>(p)); };
}

Binder bind_constants(Tape& tape) {
  return [&tape](const Param& p) { return tape.constant(p.value); };
}

Var adapted_linear(Tape& tape, Var weight, std::optional<Var> bias, Var a, Var b, Var input) {
  const Var base = diff::linear(tape, weight, bias, input);
  const Var down = diff::linear(tape, a, std::nullopt, input);
  const Var up = diff::linear(tape, b, std::nullopt, down);
  return diff::add(tape, base, up);
}

Var apply_layer(Tape& tape, const Model& model, const Binder& bind, const LinearLayer& layer,
                Var input) {
  const Var w = bind(model.param(layer.weight));
  std::optional<Var> b;
  if (!layer.bias.empty()) b = bind(model.param(layer.bias));
  Var out{};
  if (auto it = model.adapters.find(layer.weight); it != model.adapters.end()) {
    out = adapted_linear(tape, w, b, bind(it->second.a), bind(it->second.b), input);
  } else {
    out = diff::linear(tape, w, b, input);
  }
  if (auto it = model.residuals.find(layer.weight); it != model.residuals.end()) {
    out = diff::add(tape, out, diff::linear(tape, bind(it->second.p), std::nullopt, input));
  }
  return out;
}

namespace {

Var mlp_block(Tape& tape, const Model& model, const Binder& bind, const std::string& prefix,
              Var h) {
  for (const char* stage : {"1", "2"}) {
    const LinearLayer layer = layer_named(model, prefix + ".fc" + stage + ".weight");
    h = apply_layer(tape, model, bind, layer, h);
    const std::string ln = prefix + ".ln" + stage;
    h = diff::layernorm(tape, bind(model.param(ln + ".gamma")), bind(model.param(ln + ".beta")),
                        h, kLayerNormEps);
    h = diff::relu(tape, h);
  }
  return h;
}

}  // namespace

Var encode_scene(Tape& tape, const Model& model, const Binder& bind, Var scene) {
  return mlp_block(tape, model, bind, "S", scene);
}

Var encode_motion(Tape& tape, const Model& model, const Binder& bind, Var offsets) {
  return mlp_block(tape, model, bind, "A", offsets);
}

Var fuse(Tape& tape, const Model& model, const Binder& bind, Var scene_emb, Var motion_emb) {
  const std::size_t d = model.config.d_model;
  const std::size_t batch = tape.value(scene_emb).rows();
  if (tape.value(scene_emb).cols() != d || tape.value(motion_emb).cols() != d) {
    throw diff::ShapeError("fuse: embeddings must have width " + std::to_string(d));
  }
  // Two tokens per sample: (scene, motion).
  const Var tokens = diff::interleave_rows(tape, scene_emb, motion_emb);
  const auto proj = [&](const char* which) {
    return apply_layer(tape, model, bind,
                       layer_named(model, std::string("F.attn.") + which + ".weight"), tokens);
  };
  const Var q = proj("q");
  const Var k = proj("k");
  const Var v = proj("v");
  const Var scores = diff::group_scores(tape, q, k, 2, 1.0 / std::sqrt(static_cast<double>(d)));
  const Var weights = diff::softmax_rows(tape, scores);
  const Var attended = diff::group_mix(tape, weights, v, 2);
  const Var projected =
      apply_layer(tape, model, bind, layer_named(model, "F.attn.o.weight"), attended);
  const Var updated = diff::add(tape, tokens, projected);
  const Var joined = diff::reshape(tape, updated, {batch, 2 * d});
  return diff::relu(tape,
                    apply_layer(tape, model, bind, layer_named(model, "F.fc.weight"), joined));
}

Var decode(Tape& tape, const Model& model, const Binder& bind, Var fused, const Tensor& anchor) {
  const auto& c = model.config;
  if (tape.value(fused).cols() != 2 * c.d_model) {
    throw diff::ShapeError("decode: fused width must be " + std::to_string(2 * c.d_model));
  }
  Var h = diff::relu(tape,
                     apply_layer(tape, model, bind, layer_named(model, "D.fc1.weight"), fused));
  h = apply_layer(tape, model, bind, layer_named(model, "D.fc2.weight"), h);
  return diff::cumsum_offsets(tape, h, anchor, c.k_modes, c.t_pred);
}

Var forward(Tape& tape, const Model& model, const Binder& bind, const Batch& batch) {
  const Var scene = tape.constant(batch.scene);
  const Var motion = tape.constant(batch.motion);
  const Var s = encode_scene(tape, model, bind, scene);
  const Var a = encode_motion(tape, model, bind, motion);
  return decode(tape, model, bind, fuse(tape, model, bind, s, a), batch.anchor);
}

Tensor predict(const Model& model, const Batch& batch) {
  Tape tape;
  const Var out = forward(tape, model, bind_constants(tape), batch);
  return tape.value(out);
}

Hypotheses unpack(const Tensor& predictions, std::size_t row, const ModelConfig& config) {
  Hypotheses out(config.k_modes, std::vector<world::Point>(config.t_pred));
  for (std::size_t m = 0; m < config.k_modes; ++m) {
    for (std::size_t t = 0; t < config.t_pred; ++t) {
      const std::size_t col = (m * config.t_pred + t) * 2;
      out[m][t] = {predictions.at(row, col), predictions.at(row, col + 1)};
    }
  }
  return out;
}

}  // namespace mosa::net
