// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

// Dense kernels behind the linear map. Every kernel exists twice: a plain
// serial loop nest kept as the reference, and an OpenMP version that splits
// work over output elements only. Each output element is reduced in the same
// order by both, so the two agree bit-for-bit.
//
// Layouts (row-major): weight out x in, input batch x in, output batch x out.
namespace mosa::kernels {

struct LinearDims {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
};

namespace serial {

// out = h W^T (+ bias). `bias` may be empty.
void linear_forward(std::span<const double> weight, std::span<const double> bias,
                    std::span<const double> input, std::span<double> output,
                    LinearDims dims);
// dW += g^T h
void linear_grad_weight(std::span<const double> grad_out, std::span<const double> input,
                        std::span<double> grad_weight, LinearDims dims);
// db += column sums of g
void linear_grad_bias(std::span<const double> grad_out, std::span<double> grad_bias,
                      LinearDims dims);
// dh += g W
void linear_grad_input(std::span<const double> grad_out, std::span<const double> weight,
                       std::span<double> grad_input, LinearDims dims);

}  // namespace serial

namespace omp {

void linear_forward(std::span<const double> weight, std::span<const double> bias,
                    std::span<const double> input, std::span<double> output,
                    LinearDims dims);
void linear_grad_weight(std::span<const double> grad_out, std::span<const double> input,
                        std::span<double> grad_weight, LinearDims dims);
void linear_grad_bias(std::span<const double> grad_out, std::span<double> grad_bias,
                      LinearDims dims);
void linear_grad_input(std::span<const double> grad_out, std::span<const double> weight,
                       std::span<double> grad_input, LinearDims dims);

/// Below this many multiply-adds the OpenMP kernels stay on one thread.
inline constexpr std::size_t kParallelThreshold = 1 << 15;

}  // namespace omp

}  // namespace mosa::kernels
