// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/adapters.hpp"

#include <gtest/gtest.h>

#include "mosa/grad_check.hpp"
#include "mosa/rng.hpp"

namespace mosa::adapt {
namespace {

using diff::Param;
using diff::Tape;
using diff::Tensor;
using diff::Var;

Tensor random_tensor(diff::Shape shape, SplitMix64& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.gaussian(0.0, stddev);
  return t;
}

net::Batch random_batch(const net::ModelConfig& c, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  net::Batch b{Tensor({n, c.grid_h * c.grid_w * c.n_classes}), Tensor({n, (c.t_obs - 1) * 2}),
               Tensor({n, 2}), Tensor({n, c.t_pred * 2})};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t cell = 0; cell < c.grid_h * c.grid_w; ++cell) {
      b.scene.at(i, cell * c.n_classes + rng.uniform_index(c.n_classes)) = 1.0;
    }
  }
  for (auto& v : b.motion.values()) v = rng.gaussian(0.0, 1.0);
  for (auto& v : b.anchor.values()) v = rng.uniform() * 16.0;
  return b;
}

Tensor adapted_value(const Tensor& w, const Tensor& a, const Tensor& b, const Tensor& h) {
  Tape tape;
  const Var y = adapted_linear(tape, tape.constant(w), std::nullopt, tape.constant(a),
                               tape.constant(b), tape.constant(h));
  return tape.value(y);
}

TEST(AdaptedLinear, WorkedExample) {
  const Tensor w = Tensor::matrix(2, 2, {1, 0, 0, 1});
  const Tensor a = Tensor::matrix(1, 2, {1, 1});
  const Tensor b = Tensor::matrix(2, 1, {2, 0});
  const Tensor h = Tensor::matrix(1, 2, {1, 2});
  EXPECT_EQ(adapted_value(w, a, b, h), Tensor::matrix(1, 2, {7, 2}));
}

TEST(AdaptedLinear, ZeroBIsBitExact) {
  SplitMix64 rng(1);
  const Tensor w = random_tensor({5, 7}, rng);
  const Tensor a = random_tensor({2, 7}, rng);
  const Tensor h = random_tensor({3, 7}, rng);
  Tape tape;
  const Var plain = diff::linear(tape, tape.constant(w), std::nullopt, tape.constant(h));
  EXPECT_EQ(adapted_value(w, a, Tensor({5, 2}), h), tape.value(plain));
}

TEST(AdaptedLinear, GradientReachesOnlyAdapter) {
  SplitMix64 rng(2);
  Param w("w", random_tensor({4, 6}, rng), false);
  Param a("a", random_tensor({2, 6}, rng));
  Param b("b", random_tensor({4, 2}, rng));
  const Tensor h = random_tensor({3, 6}, rng);
  const Tensor proj = random_tensor({1, 4}, rng);
  const auto loss = [&](Tape& t) {
    const Var y = adapted_linear(t, t.param(w), std::nullopt, t.param(a), t.param(b),
                                 t.constant(h));
    return diff::sum(t, diff::linear(t, t.constant(proj), std::nullopt, y));
  };
  const auto report = diff::grad_check(loss, {&a, &b});
  EXPECT_TRUE(report.passed()) << report.summary();
  Tape tape;
  w.zero_grad();
  tape.backward(loss(tape));
  for (double g : w.grad.values()) EXPECT_EQ(g, 0.0);
}

TEST(Merge, WorkedExample) {
  net::Model m;
  m.params.emplace("S.fc2.weight", Param("S.fc2.weight", Tensor::matrix(2, 2, {1, 0, 0, 1})));
  m.adapters.emplace("S.fc2.weight",
                     AdapterPair{"S.fc2.weight", Param("S.fc2.mosa.A", Tensor::matrix(1, 2, {1, 1})),
                                 Param("S.fc2.mosa.B", Tensor::matrix(2, 1, {2, 0}))});
  const net::Model merged = merge(m);
  EXPECT_TRUE(merged.adapters.empty());
  EXPECT_EQ(merged.param("S.fc2.weight").value, Tensor::matrix(2, 2, {3, 2, 0, 1}));
}

TEST(Merge, RandomInstancesAgree) {
  SplitMix64 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d_in = 2 + rng.uniform_index(30);
    const std::size_t d_out = 2 + rng.uniform_index(30);
    const std::size_t r = 1 + rng.uniform_index(std::min(d_in, d_out) - 1);
    const Tensor w = random_tensor({d_out, d_in}, rng);
    const Tensor a = random_tensor({r, d_in}, rng);
    const Tensor b = random_tensor({d_out, r}, rng);
    const Tensor h = random_tensor({4, d_in}, rng);
    net::Model m;
    m.params.emplace("S.x.weight", Param("S.x.weight", w));
    m.adapters.emplace("S.x.weight", AdapterPair{"S.x.weight", Param("A", a), Param("B", b)});
    const net::Model merged = merge(m);
    const Tensor& merged_w = merged.param("S.x.weight").value;
    Tape tape;
    const Var y = diff::linear(tape, tape.constant(merged_w), std::nullopt, tape.constant(h));
    worst = std::max(worst, diff::max_abs_diff(tape.value(y), adapted_value(w, a, b, h)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Merge, ZeroBLeavesWeightsUnchanged) {
  const net::Model base = net::init_model({});
  AdapterSpec spec;
  spec.targets = default_targets(base.config, {});
  const net::Model merged = merge(inject(base, spec));
  for (const auto& [name, p] : base.params) EXPECT_EQ(merged.param(name).value, p.value) << name;
}

TEST(Merge, ModelOutputsAgree) {
  const net::Model base = net::init_model({});
  AdapterSpec spec;
  spec.targets = default_targets(base.config, {});
  net::Model adapted = inject(base, spec);
  SplitMix64 rng(4);
  for (auto& [name, pair] : adapted.adapters) {
    for (auto& v : pair.b.value.values()) v = rng.gaussian(0.0, 0.05);
  }
  const net::Batch batch = random_batch(base.config, 20, 5);
  EXPECT_LE(diff::max_abs_diff(net::predict(adapted, batch), net::predict(merge(adapted), batch)),
            1e-9);
}

TEST(Merge, ParallelResidualFolds) {
  const net::Model base = net::init_model({});
  net::Model pa = inject_parallel(base, {"A.fc2.weight"});
  SplitMix64 rng(6);
  for (auto& v : pa.residuals.at("A.fc2.weight").p.value.values()) v = rng.gaussian(0.0, 0.1);
  const net::Batch batch = random_batch(base.config, 5, 7);
  EXPECT_LE(diff::max_abs_diff(net::predict(pa, batch), net::predict(merge(pa), batch)), 1e-9);
}

TEST(Inject, ZeroInitTransparency) {
  const net::Model base = net::init_model({});
  AdapterSpec spec;
  spec.targets = default_targets(base.config, {});
  const net::Model adapted = inject(base, spec);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const net::Batch batch = random_batch(base.config, 8, 10 + s);
    EXPECT_EQ(net::predict(base, batch), net::predict(adapted, batch));
  }
}

TEST(Inject, InitialisationAndBookkeeping) {
  const net::Model base = net::init_model({});
  AdapterSpec spec;
  spec.rank = 2;
  spec.targets = {"S.fc2.weight", "A.fc1.weight", "F.attn.v.weight"};
  spec.seed = 9;
  const net::Model m = inject(base, spec);
  ASSERT_EQ(m.adapters.size(), 3u);
  for (const auto& [name, p] : m.params) {
    const bool target = std::find(spec.targets.begin(), spec.targets.end(), name) !=
                        spec.targets.end();
    EXPECT_EQ(p.trainable, !target) << name;
  }
  const auto& pair = m.adapters.at("A.fc1.weight");
  EXPECT_EQ(pair.a.name, "A.fc1.mosa.A");
  EXPECT_EQ(pair.b.name, "A.fc1.mosa.B");
  EXPECT_EQ(pair.a.value.shape(), (diff::Shape{2, 14}));
  EXPECT_EQ(pair.b.value.shape(), (diff::Shape{64, 2}));
  for (double v : pair.b.value.values()) EXPECT_EQ(v, 0.0);
  // A for target index 1 comes from derive_seed(seed, 1)
  SplitMix64 rng(derive_seed(9, 1));
  for (double v : pair.a.value.values()) EXPECT_EQ(v, rng.gaussian(0.0, spec.init_std));

  const net::Model again = inject(base, spec);
  for (const auto& [name, p] : m.adapters) {
    EXPECT_EQ(again.adapters.at(name).a.value, p.a.value);
  }
}

TEST(Inject, RejectsInvalidTargets) {
  const net::Model base = net::init_model({});
  AdapterSpec spec;
  spec.targets = {"S.fc1.bias"};
  EXPECT_THROW(inject(base, spec), AdapterError);
  spec.targets = {"S.fc9.weight"};
  EXPECT_THROW(inject(base, spec), AdapterError);
  spec.targets = {"A.fc1.weight"};
  spec.rank = 14;  // d_in is 14
  EXPECT_THROW(inject(base, spec), AdapterError);
  spec.rank = 13;
  EXPECT_NO_THROW(inject(base, spec));
  spec.rank = 0;
  EXPECT_THROW(inject(base, spec), AdapterError);
  spec.rank = 3;
  EXPECT_THROW(inject(inject(base, spec), spec), AdapterError);
}

TEST(Count, ExactArithmetic) {
  const TargetCount c64 = layer_count(64, 64, 3);
  EXPECT_EQ(c64.adapter, 384u);
  EXPECT_EQ(c64.base, 4160u);
  EXPECT_NEAR(static_cast<double>(c64.adapter) / c64.base, 0.0923, 5e-5);
  const TargetCount r1 = layer_count(64, 64, 1);
  EXPECT_EQ(r1.adapter, 128u);
  EXPECT_NEAR(static_cast<double>(r1.adapter) / r1.base, 0.0308, 5e-5);
  const TargetCount big = layer_count(512, 512, 3);
  EXPECT_EQ(big.adapter, 3072u);
  EXPECT_EQ(big.base, 262656u);
  EXPECT_LT(static_cast<double>(big.adapter) / big.base, 0.02);
}

TEST(Count, MatchesTrainableCount) {
  const net::Model base = net::init_model({});
  for (std::size_t r : {1, 3, 10}) {
    AdapterSpec spec;
    spec.rank = r;
    spec.targets = default_targets(base.config, {});
    const AdapterCount count = count_adapter_params(spec, base.config);
    std::size_t expected = 0;
    for (const auto& layer : net::linear_layers(base.config)) {
      if (std::find(spec.targets.begin(), spec.targets.end(), layer.weight) != spec.targets.end()) {
        expected += r * (layer.in + layer.out);
      }
    }
    EXPECT_EQ(count.total_adapter, expected);
    const net::Model m = prepare(base, Method::MOSA, {}, r, 0.02, 0);
    EXPECT_EQ(m.count_trainable(), expected);
  }
}

TEST(Rank, RandomPairsHaveFullRank) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    AdapterPair pair{"x", Param("A", random_tensor({2, 5}, rng)),
                     Param("B", random_tensor({4, 2}, rng))};
    EXPECT_EQ(verify_rank(pair), 2u);
  }
}

TEST(Rank, DegenerateCases) {
  SplitMix64 rng(12);
  AdapterPair zero{"x", Param("A", random_tensor({3, 6}, rng)), Param("B", Tensor({6, 3}))};
  EXPECT_EQ(verify_rank(zero), 0u);
  AdapterPair outer{"x", Param("A", random_tensor({1, 6}, rng)),
                    Param("B", random_tensor({6, 1}, rng))};
  EXPECT_EQ(verify_rank(outer), 1u);
  // two identical rank components collapse to rank 1
  Tensor a = random_tensor({2, 6}, rng);
  for (std::size_t j = 0; j < 6; ++j) a.at(1, j) = 2.0 * a.at(0, j);
  AdapterPair dup{"x", Param("A", a), Param("B", random_tensor({6, 2}, rng))};
  EXPECT_EQ(verify_rank(dup), 1u);
  EXPECT_EQ(numeric_rank(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1})), 3u);
}

TEST(SelectTrainables, Baselines) {
  const net::Model base = net::init_model({});
  const auto norm = select_trainables(base, Method::NORM, {});
  const std::set<std::string> ln{"A.ln1.beta", "A.ln1.gamma", "A.ln2.beta", "A.ln2.gamma",
                                 "S.ln1.beta", "S.ln1.gamma", "S.ln2.beta", "S.ln2.gamma"};
  EXPECT_EQ(norm, ln);

  const auto ft = select_trainables(base, Method::FT, {});
  EXPECT_EQ(ft.size(), base.params.size());
  EXPECT_TRUE(prepare(base, Method::FT, {}, 3, 0.02, 0).adapters.empty());

  for (const auto& name : select_trainables(base, Method::ET, {})) {
    EXPECT_NE(net::tag_of(name), ModuleTag::Decoder) << name;
  }

  const auto agent = select_trainables(base, Method::MOSA, {ModuleTag::Agent});
  EXPECT_EQ(agent, (std::set<std::string>{"A.fc1.mosa.A", "A.fc1.mosa.B", "A.fc2.mosa.A",
                                          "A.fc2.mosa.B"}));

  const auto all = select_trainables(base, Method::MOSA, {});
  EXPECT_EQ(all.size(), 14u);
  EXPECT_TRUE(all.contains("F.attn.q.mosa.A"));
  EXPECT_TRUE(all.contains("F.attn.v.mosa.B"));
  EXPECT_FALSE(all.contains("F.attn.k.mosa.A"));
  EXPECT_FALSE(all.contains("F.attn.o.mosa.A"));
  for (const auto& name : all) EXPECT_NE(net::tag_of(name), ModuleTag::Decoder);

  const auto pa = select_trainables(base, Method::PA, {ModuleTag::Scene});
  EXPECT_EQ(pa, (std::set<std::string>{"S.fc1.parallel.P", "S.fc2.parallel.P"}));
}

TEST(SelectTrainables, RejectsBadInput) {
  const net::Model base = net::init_model({});
  EXPECT_THROW(select_trainables(base, Method::MOSA, {ModuleTag::Decoder}), AdapterError);
  EXPECT_THROW(parse_method("LoRA"), std::invalid_argument);
  EXPECT_THROW(parse_mask("S+D"), std::invalid_argument);
  const net::Model adapted = prepare(base, Method::MOSA, {}, 3, 0.02, 0);
  EXPECT_THROW(prepare(adapted, Method::MOSA, {}, 3, 0.02, 0), AdapterError);
}

TEST(Mask, RoundTrip) {
  EXPECT_EQ(mask_to_string({}), "all");
  EXPECT_EQ(mask_to_string({ModuleTag::Fusion, ModuleTag::Scene}), "S+F");
  EXPECT_EQ(parse_mask("F+S"), (ModularMask{ModuleTag::Scene, ModuleTag::Fusion}));
  EXPECT_EQ(parse_mask("all"), ModularMask{});
  for (const char* m : {"all", "S", "A", "F", "S+A", "S+F", "A+F", "S+A+F"}) {
    EXPECT_EQ(mask_to_string(parse_mask(m)), m);
  }
  for (Method m : {Method::FT, Method::ET, Method::PA, Method::NORM, Method::MOSA}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
}

}  // namespace
}  // namespace mosa::adapt
