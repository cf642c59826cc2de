// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/kernels.hpp"

#include <cstdint>

namespace mosa::kernels {

namespace serial {

void linear_forward(std::span<const double> weight, std::span<const double> bias,
                    std::span<const double> input, std::span<double> output,
                    LinearDims d) {
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* h = input.data() + i * d.in;
    for (std::size_t j = 0; j < d.out; ++j) {
      const double* w = weight.data() + j * d.in;
      double acc = 0.0;
      for (std::size_t k = 0; k < d.in; ++k) acc += w[k] * h[k];
      if (!bias.empty()) acc += bias[j];
      output[i * d.out + j] = acc;
    }
  }
}

void linear_grad_weight(std::span<const double> grad_out, std::span<const double> input,
                        std::span<double> grad_weight, LinearDims d) {
  for (std::size_t i = 0; i < d.batch; ++i) {
    const double* h = input.data() + i * d.in;
    for (std::size_t j = 0; j < d.out; ++j) {
      const double g = grad_out[i * d.out + j];
      if (g == 0.0) continue;
      double* dw = grad_weight.data() + j * d.in;
      for (std::size_t k = 0; k < d.in; ++k) dw[k] += g * h[k];
    }
  }
}

void linear_grad_bias(std::span<const double> grad_out, std::span<double> grad_bias,
                      LinearDims d) {
  for (std::size_t i = 0; i < d.batch; ++i) {
    for (std::size_t j = 0; j < d.out; ++j) grad_bias[j] += grad_out[i * d.out + j];
  }
}

void linear_grad_input(std::span<const double> grad_out, std::span<const double> weight,
                       std::span<double> grad_input, LinearDims d) {
  for (std::size_t i = 0; i < d.batch; ++i) {
    double* dh = grad_input.data() + i * d.in;
    for (std::size_t j = 0; j < d.out; ++j) {
      const double g = grad_out[i * d.out + j];
      if (g == 0.0) continue;
      const double* w = weight.data() + j * d.in;
      for (std::size_t k = 0; k < d.in; ++k) dh[k] += g * w[k];
    }
  }
}

}  // namespace serial

namespace omp {

namespace {

bool worth_parallel(LinearDims d) { return d.batch * d.in * d.out >= kParallelThreshold; }

}  // namespace

void linear_forward(std::span<const double> weight, std::span<const double> bias,
                    std::span<const double> input, std::span<double> output,
                    LinearDims d) {
  const auto cells = static_cast<std::int64_t>(d.batch * d.out);
#pragma omp parallel for schedule(static) if (worth_parallel(d))
  for (std::int64_t cell = 0; cell < cells; ++cell) {
    const auto i = static_cast<std::size_t>(cell) / d.out;
    const auto j = static_cast<std::size_t>(cell) % d.out;
    const double* h = input.data() + i * d.in;
    const double* w = weight.data() + j * d.in;
    double acc = 0.0;
    for (std::size_t k = 0; k < d.in; ++k) acc += w[k] * h[k];
    if (!bias.empty()) acc += bias[j];
    output[i * d.out + j] = acc;
  }
}

void linear_grad_weight(std::span<const double> grad_out, std::span<const double> input,
                        std::span<double> grad_weight, LinearDims d) {
  const auto rows = static_cast<std::int64_t>(d.out);
#pragma omp parallel for schedule(static) if (worth_parallel(d))
  for (std::int64_t jj = 0; jj < rows; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double* dw = grad_weight.data() + j * d.in;
    for (std::size_t i = 0; i < d.batch; ++i) {
      const double g = grad_out[i * d.out + j];
      if (g == 0.0) continue;
      const double* h = input.data() + i * d.in;
      for (std::size_t k = 0; k < d.in; ++k) dw[k] += g * h[k];
    }
  }
}

void linear_grad_bias(std::span<const double> grad_out, std::span<double> grad_bias,
                      LinearDims d) {
  // Tiny; parallelism would cost more than it saves.
  serial::linear_grad_bias(grad_out, grad_bias, d);
}

void linear_grad_input(std::span<const double> grad_out, std::span<const double> weight,
                       std::span<double> grad_input, LinearDims d) {
  const auto rows = static_cast<std::int64_t>(d.batch);
#pragma omp parallel for schedule(static) if (worth_parallel(d))
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* dh = grad_input.data() + i * d.in;
    for (std::size_t j = 0; j < d.out; ++j) {
      const double g = grad_out[i * d.out + j];
      if (g == 0.0) continue;
      const double* w = weight.data() + j * d.in;
      for (std::size_t k = 0; k < d.in; ++k) dh[k] += g * w[k];
    }
  }
}

}  // namespace omp

}  // namespace mosa::kernels
