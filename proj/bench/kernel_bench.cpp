// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include <benchmark/benchmark.h>

#include "mosa/kernels.hpp"
#include "mosa/metrics.hpp"
#include "mosa/rng.hpp"

namespace {

using mosa::kernels::LinearDims;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  mosa::SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

// Args: batch, in, out
template <auto Kernel>
void BM_LinearForward(benchmark::State& state) {
  const LinearDims dims{static_cast<std::size_t>(state.range(0)),
                        static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto w = random_vector(dims.out * dims.in, 1);
  const auto b = random_vector(dims.out, 2);
  const auto h = random_vector(dims.batch * dims.in, 3);
  std::vector<double> out(dims.batch * dims.out);
  for (auto _ : state) {
    Kernel(w, b, h, out, dims);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * dims.batch * dims.in * dims.out);
}

template <auto Kernel>
void BM_LinearGradWeight(benchmark::State& state) {
  const LinearDims dims{static_cast<std::size_t>(state.range(0)),
                        static_cast<std::size_t>(state.range(1)),
                        static_cast<std::size_t>(state.range(2))};
  const auto g = random_vector(dims.batch * dims.out, 4);
  const auto h = random_vector(dims.batch * dims.in, 5);
  std::vector<double> dw(dims.out * dims.in);
  for (auto _ : state) {
    Kernel(g, h, dw, dims);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * dims.batch * dims.in * dims.out);
}

void linear_shapes(benchmark::internal::Benchmark* b) {
  b->Args({10, 1024, 64});  // scene encoder input layer
  b->Args({10, 128, 128});  // fusion
  b->Args({64, 128, 120});  // decoder at evaluation batch size
  b->Args({64, 512, 512});
}

BENCHMARK(BM_LinearForward<mosa::kernels::serial::linear_forward>)->Apply(linear_shapes);
BENCHMARK(BM_LinearForward<mosa::kernels::omp::linear_forward>)->Apply(linear_shapes);
BENCHMARK(BM_LinearGradWeight<mosa::kernels::serial::linear_grad_weight>)->Apply(linear_shapes);
BENCHMARK(BM_LinearGradWeight<mosa::kernels::omp::linear_grad_weight>)->Apply(linear_shapes);

struct EvalFixture {
  mosa::net::Model model = mosa::net::init_model({});
  mosa::world::Dataset data = mosa::world::generate_dataset(
      {mosa::world::build_scene("layout1"), mosa::world::build_scene("layout2")}, {}, 256, 1, 8,
      12);
};

const EvalFixture& eval_fixture() {
  static const EvalFixture f;
  return f;
}

void BM_EvaluateSerial(benchmark::State& state) {
  const auto& f = eval_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(mosa::metrics::evaluate_serial(f.model, f.data, 5));
  state.SetItemsProcessed(state.iterations() * f.data.samples.size());
}

void BM_Evaluate(benchmark::State& state) {
  const auto& f = eval_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(mosa::metrics::evaluate(f.model, f.data, 5));
  state.SetItemsProcessed(state.iterations() * f.data.samples.size());
}

BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
