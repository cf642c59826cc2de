// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mosa/tensor.hpp"

namespace mosa::diff {

/// Handle to a node recorded on a Tape.
struct Var {
  std::size_t id;
};

class Tape;

/// Called once during backward with the node's own id. The node's grad is
/// complete at that point; the function adds into its inputs' grads.
using BackwardFn = std::function<void(Tape&, std::size_t self)>;

/// Reverse-mode tape. Nodes are appended in evaluation order, which is a
/// topological order, so backward is a single reverse sweep. One tape per
/// forward pass; a tape is not thread-safe.
class Tape {
 public:
  Var constant(Tensor value);

  /// Leaf bound to a Param. Gradients are accumulated into `p.grad` (sum over
  /// uses) only if `p.trainable`. The Param must outlive the tape.
  Var param(Param& p);

  /// Records an op result. `requires_grad` is derived from the inputs.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  /// Gradient of node `id`; only meaningful during/after backward.
  const Tensor& grad(std::size_t id) const { return nodes_.at(id).grad; }

  /// Accumulation target for an input's gradient, allocated on first use.
  /// Returns nullptr when the input does not require a gradient.
  Tensor* grad_sink(std::size_t id);

  /// Backpropagates from a scalar (size-1) node. Throws ShapeError otherwise.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  /// Ops with discrete choices (ReLU masks, best-mode selection) fold them in
  /// here; two tapes with equal signatures took the same branches.
  void note_branch(std::uint64_t choice);
  std::uint64_t branch_signature() const { return branch_signature_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Param* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::uint64_t branch_signature_ = 0xcbf29ce484222325ULL;
};

// ---- differentiable operations -------------------------------------------

/// h (batch x in) times W^T (W is out x in), plus optional bias (out).
Var linear(Tape& tape, Var weight, std::optional<Var> bias, Var input);
Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
Var relu(Tape& tape, Var x);
/// Per-row standardization followed by gamma * x + beta.
Var layernorm(Tape& tape, Var gamma, Var beta, Var input, double eps = 1e-5);
Var softmax_rows(Tape& tape, Var x);
Var sum(Tape& tape, Var x);
Var reshape(Tape& tape, Var x, Shape shape);

/// Rows (a0, b0, a1, b1, ...) from two tensors of equal shape n x d.
Var interleave_rows(Tape& tape, Var a, Var b);

/// For rows grouped in consecutive blocks of `group`, out[i][j] is
/// factor * <q_i, k_{base(i)+j}> where base(i) is the first row of i's block.
Var group_scores(Tape& tape, Var q, Var k, std::size_t group, double factor);

/// out_i = sum_j p[i][j] * v_{base(i)+j}; p is n x group, v is n x d.
Var group_mix(Tape& tape, Var p, Var v, std::size_t group);

/// x is batch x (modes*steps*2) of per-step offsets; result holds absolute
/// positions anchor[b] + running sum over steps for each mode.
Var cumsum_offsets(Tape& tape, Var x, const Tensor& anchor, std::size_t modes,
                   std::size_t steps);

/// Mean over the batch of min over modes of the mean squared step error.
/// Ties pick the lowest mode; only that mode receives gradient.
Var variety_loss(Tape& tape, Var predictions, const Tensor& future, std::size_t modes,
                 std::size_t steps);

}  // namespace mosa::diff
