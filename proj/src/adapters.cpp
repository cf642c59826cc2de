// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/adapters.hpp"

#include <algorithm>
#include <cmath>

#include "mosa/rng.hpp"

namespace mosa::adapt {

using diff::Param;
using diff::Tensor;

std::string to_string(Method m) {
  switch (m) {
    case Method::FT: return "FT";
    case Method::ET: return "ET";
    case Method::PA: return "PA";
    case Method::NORM: return "NORM";
    case Method::MOSA: return "MOSA";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::FT, Method::ET, Method::PA, Method::NORM, Method::MOSA}) {
    if (to_string(m) == text) return m;
  }
  throw AdapterError("unknown adaptation method '" + text + "' (expected FT, ET, PA, NORM, MOSA)");
}

std::string mask_to_string(const ModularMask& mask) {
  if (mask.empty()) return "all";
  std::string out;
  // Canonical order S, A, F regardless of set ordering.
  for (ModuleTag t : {ModuleTag::Scene, ModuleTag::Agent, ModuleTag::Fusion}) {
    if (!mask.contains(t)) continue;
    if (!out.empty()) out += "+";
    out += net::to_string(t);
  }
  return out;
}

ModularMask parse_mask(const std::string& text) {
  ModularMask mask;
  if (text == "all" || text.empty()) return mask;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('+', pos), text.size());
    const std::string part = text.substr(pos, end - pos);
    ModuleTag tag;
    try {
      tag = net::parse_tag(part);
    } catch (const std::invalid_argument&) {
      throw AdapterError("bad modular mask '" + text + "': unknown module '" + part + "'");
    }
    if (tag == ModuleTag::Decoder) {
      throw AdapterError("bad modular mask '" + text + "': decoder is not adaptable");
    }
    mask.insert(tag);
    pos = end + 1;
  }
  return mask;
}

std::vector<std::string> default_targets(const net::ModelConfig& config,
                                         const ModularMask& mask) {
  std::vector<std::string> out;
  for (const auto& layer : net::linear_layers(config)) {
    if (layer.tag == ModuleTag::Decoder) continue;
    if (layer.weight == "F.attn.k.weight" || layer.weight == "F.attn.o.weight") continue;
    if (!mask.empty() && !mask.contains(layer.tag)) continue;
    out.push_back(layer.weight);
  }
  return out;
}

namespace {

const net::LinearLayer& find_layer(const std::vector<net::LinearLayer>& layers,
                                   const std::string& name) {
  for (const auto& layer : layers) {
    if (layer.weight == name) return layer;
  }
  if (std::any_of(layers.begin(), layers.end(),
                  [&name](const net::LinearLayer& l) { return l.bias == name; })) {
    throw AdapterError("adapter target '" + name + "' is a bias; only weights can be adapted");
  }
  throw AdapterError("adapter target '" + name + "' is not a linear weight of the model");
}

std::string branch_prefix(const std::string& weight) {
  const std::string suffix = ".weight";
  if (weight.size() > suffix.size() &&
      weight.compare(weight.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return weight.substr(0, weight.size() - suffix.size());
  }
  return weight;
}

}  // namespace

Model inject(const Model& base, const AdapterSpec& spec) {
  if (spec.rank == 0) throw AdapterError("adapter rank must be at least 1");
  if (!(spec.init_std > 0.0)) throw AdapterError("adapter init_std must be positive");
  if (spec.targets.empty()) throw AdapterError("adapter spec has no targets");
  const auto layers = net::linear_layers(base.config);
  for (const auto& name : spec.targets) {
    const auto& layer = find_layer(layers, name);
    if (spec.rank >= std::min(layer.in, layer.out)) {
      throw AdapterError("rank " + std::to_string(spec.rank) + " is not below min(d_in, d_out) = " +
                         std::to_string(std::min(layer.in, layer.out)) + " for '" + name + "'");
    }
    if (base.adapters.contains(name) || base.residuals.contains(name)) {
      throw AdapterError("'" + name + "' already carries a residual branch");
    }
  }

  Model out = base;
  out.adapter_spec = spec;
  for (std::size_t i = 0; i < spec.targets.size(); ++i) {
    const auto& name = spec.targets[i];
    const auto& layer = find_layer(layers, name);
    SplitMix64 rng(derive_seed(spec.seed, i));
    Tensor a({spec.rank, layer.in});
    for (auto& v : a.values()) v = rng.gaussian(0.0, spec.init_std);
    const std::string prefix = branch_prefix(name);
    AdapterPair pair{name, Param(prefix + ".mosa.A", std::move(a)),
                     Param(prefix + ".mosa.B", Tensor({layer.out, spec.rank}))};
    out.adapters.emplace(name, std::move(pair));
    out.param(name).trainable = false;
  }
  return out;
}

Model inject_parallel(const Model& base, const std::vector<std::string>& targets) {
  if (targets.empty()) throw AdapterError("parallel adapter has no targets");
  const auto layers = net::linear_layers(base.config);
  Model out = base;
  for (const auto& name : targets) {
    const auto& layer = find_layer(layers, name);
    if (out.adapters.contains(name) || out.residuals.contains(name)) {
      throw AdapterError("'" + name + "' already carries a residual branch");
    }
    out.residuals.emplace(name, net::ParallelResidual{
                                    name, Param(branch_prefix(name) + ".parallel.P",
                                                Tensor({layer.out, layer.in}))});
    out.param(name).trainable = false;
  }
  return out;
}

Model merge(const Model& adapted) {
  Model out = adapted;
  for (const auto& [name, pair] : adapted.adapters) {
    Tensor& w = out.param(name).value;
    const Tensor& a = pair.a.value;
    const Tensor& b = pair.b.value;
    const std::size_t rank = a.rows();
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < rank; ++k) acc += b.at(i, k) * a.at(k, j);
        w.at(i, j) += acc;
      }
    }
  }
  for (const auto& [name, res] : adapted.residuals) {
    Tensor& w = out.param(name).value;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += res.p.value[i];
  }
  out.adapters.clear();
  out.residuals.clear();
  out.adapter_spec.reset();
  for (auto& [name, p] : out.params) p.trainable = true;
  return out;
}

TargetCount layer_count(std::size_t d_in, std::size_t d_out, std::size_t rank, bool bias) {
  TargetCount c;
  c.d_in = d_in;
  c.d_out = d_out;
  c.adapter = rank * (d_in + d_out);
  c.base = d_in * d_out + (bias ? d_out : 0);
  return c;
}

AdapterCount count_adapter_params(const AdapterSpec& spec, const net::ModelConfig& config) {
  const auto layers = net::linear_layers(config);
  AdapterCount count;
  for (const auto& name : spec.targets) {
    const auto& layer = find_layer(layers, name);
    TargetCount c = layer_count(layer.in, layer.out, spec.rank, !layer.bias.empty());
    c.name = name;
    count.total_adapter += c.adapter;
    count.total_base += c.base;
    count.targets.push_back(std::move(c));
  }
  return count;
}

std::size_t numeric_rank(const Tensor& matrix, double rel_tol) {
  Tensor m = matrix;
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  double scale = 0.0;
  for (double v : m.values()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0;
  const double threshold = rel_tol * scale;

  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows; ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (std::abs(m.at(r, col)) > std::abs(m.at(pivot, col))) pivot = r;
    }
    if (std::abs(m.at(pivot, col)) <= threshold) continue;
    if (pivot != rank) {
      for (std::size_t c = 0; c < cols; ++c) std::swap(m.at(pivot, c), m.at(rank, c));
    }
    for (std::size_t r = rank + 1; r < rows; ++r) {
      const double f = m.at(r, col) / m.at(rank, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < cols; ++c) m.at(r, c) -= f * m.at(rank, c);
    }
    ++rank;
  }
  return rank;
}

std::size_t verify_rank(const AdapterPair& pair, double rel_tol) {
  const Tensor& a = pair.a.value;
  const Tensor& b = pair.b.value;
  Tensor product({b.rows(), a.cols()});
  for (std::size_t i = 0; i < b.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += b.at(i, k) * a.at(k, j);
      product.at(i, j) = acc;
    }
  }
  return numeric_rank(product, rel_tol);
}

Model prepare(const Model& base, Method method, const ModularMask& mask, std::size_t rank,
              double init_std, std::uint64_t seed) {
  if (!base.adapters.empty() || !base.residuals.empty()) {
    throw AdapterError("prepare expects a plain checkpoint without residual branches");
  }
  for (ModuleTag t : mask) {
    if (t == ModuleTag::Decoder) throw AdapterError("decoder is not a valid mask module");
  }
  Model out = base;
  const auto set_all = [&out](bool trainable) {
    for (auto& [name, p] : out.params) p.trainable = trainable;
  };
  switch (method) {
    case Method::FT:
      set_all(true);
      break;
    case Method::ET:
      for (auto& [name, p] : out.params) p.trainable = net::tag_of(name) != ModuleTag::Decoder;
      break;
    case Method::NORM:
      for (auto& [name, p] : out.params) {
        p.trainable = name.find(".ln") != std::string::npos;
      }
      break;
    case Method::PA:
      set_all(false);
      out = inject_parallel(out, default_targets(base.config, mask));
      break;
    case Method::MOSA: {
      set_all(false);
      AdapterSpec spec;
      spec.rank = rank;
      spec.targets = default_targets(base.config, mask);
      spec.init_std = init_std;
      spec.seed = seed;
      out = inject(out, spec);
      break;
    }
  }
  if (out.count_trainable() == 0) {
    throw AdapterError("method " + to_string(method) + " leaves nothing trainable");
  }
  return out;
}

std::set<std::string> select_trainables(const Model& base, Method method,
                                        const ModularMask& mask, std::size_t rank,
                                        double init_std, std::uint64_t seed) {
  Model prepared = prepare(base, method, mask, rank, init_std, seed);
  std::set<std::string> names;
  for (const auto* p : prepared.all_params()) {
    if (p->trainable) names.insert(p->name);
  }
  return names;
}

}  // namespace mosa::adapt
