// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mosa/kernels.hpp"

namespace mosa::diff {

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

Var Tape::param(Param& p) {
  Node node;
  node.value = p.value;
  node.requires_grad = p.trainable;
  node.param = &p;
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                   [this](std::size_t i) { return nodes_.at(i).requires_grad; });
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {nodes_.size() - 1};
}

void Tape::note_branch(std::uint64_t choice) {
  // FNV-1a style fold.
  branch_signature_ = (branch_signature_ ^ choice) * 0x100000001b3ULL;
}

Tensor* Tape::grad_sink(std::size_t id) {
  Node& node = nodes_.at(id);
  if (!node.requires_grad) return nullptr;
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return &node.grad;
}

void Tape::backward(Var loss) {
  if (value(loss).size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " +
                     shape_string(value(loss).shape()));
  }
  for (auto& node : nodes_) node.has_grad = false;
  Tensor* seed = grad_sink(loss.id);
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad) continue;
    if (node.param != nullptr) {
      auto dst = node.param->grad.values();
      auto src = node.grad.values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    } else if (node.backward) {
      node.backward(*this, id);
    }
  }
}

// ---- operations ------------------------------------------------------------

namespace {

void require_rank2(const Tensor& t, const char* op, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": " + what + " must be 2-D, got " +
                     shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

}  // namespace

Var linear(Tape& tape, Var weight, std::optional<Var> bias, Var input) {
  const Tensor& w = tape.value(weight);
  const Tensor& h = tape.value(input);
  require_rank2(w, "linear", "weight");
  require_rank2(h, "linear", "input");
  if (w.cols() != h.cols()) {
    throw ShapeError("linear: weight is " + shape_string(w.shape()) + " but input is " +
                     shape_string(h.shape()) + " (inner dimensions " +
                     std::to_string(w.cols()) + " vs " + std::to_string(h.cols()) + ")");
  }
  const kernels::LinearDims dims{h.rows(), w.cols(), w.rows()};
  std::span<const double> b;
  if (bias) {
    const Tensor& bt = tape.value(*bias);
    if (bt.size() != dims.out) {
      throw ShapeError("linear: bias has " + std::to_string(bt.size()) + " entries, expected " +
                       std::to_string(dims.out));
    }
    b = bt.values();
  }
  Tensor out({dims.batch, dims.out});
  kernels::omp::linear_forward(w.values(), b, h.values(), out.values(), dims);

  std::vector<std::size_t> inputs{weight.id, input.id};
  if (bias) inputs.push_back(bias->id);
  return tape.record(std::move(out), inputs, [inputs, dims](Tape& t, std::size_t self) {
    const auto g = t.grad(self).values();
    if (Tensor* dw = t.grad_sink(inputs[0])) {
      kernels::omp::linear_grad_weight(g, t.value(inputs[1]).values(), dw->values(), dims);
    }
    if (Tensor* dh = t.grad_sink(inputs[1])) {
      kernels::omp::linear_grad_input(g, t.value(inputs[0]).values(), dh->values(), dims);
    }
    if (inputs.size() == 3) {
      if (Tensor* db = t.grad_sink(inputs[2])) {
        kernels::omp::linear_grad_bias(g, db->values(), dims);
      }
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  require_same_shape(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return tape.record(std::move(out), {a.id, b.id}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (auto id : {a.id, b.id}) {
      if (Tensor* d = t.grad_sink(id)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
      }
    }
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Tensor out = tape.value(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  return tape.record(std::move(out), {x.id}, [x, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* d = t.grad_sink(x.id)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += factor * g[i];
    }
  });
}

Var relu(Tape& tape, Var x) {
  Tensor out = tape.value(x);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool active = out[i] > 0.0;
    tape.note_branch(active ? 2 * i + 1 : 2 * i);
    out[i] = active ? out[i] : 0.0;
  }
  return tape.record(std::move(out), {x.id}, [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(x);
    if (Tensor* d = t.grad_sink(x.id)) {
      // Subgradient at exactly zero is 0.
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (in[i] > 0.0) (*d)[i] += g[i];
      }
    }
  });
}

Var layernorm(Tape& tape, Var gamma, Var beta, Var input, double eps) {
  const Tensor& h = tape.value(input);
  const Tensor& gm = tape.value(gamma);
  const Tensor& bt = tape.value(beta);
  require_rank2(h, "layernorm", "input");
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  if (d < 2) throw ShapeError("layernorm: need at least 2 features");
  if (gm.size() != d || bt.size() != d) {
    throw ShapeError("layernorm: gamma/beta must have " + std::to_string(d) + " entries");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("layernorm: eps must be positive");

  Tensor normalized({n, d});
  std::vector<double> inv_std(n);
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < d; ++k) mean += h.at(i, k);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double c = h.at(i, k) - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t k = 0; k < d; ++k) {
      normalized.at(i, k) = (h.at(i, k) - mean) * inv_std[i];
      out.at(i, k) = gm[k] * normalized.at(i, k) + bt[k];
    }
  }
  return tape.record(
      std::move(out), {gamma.id, beta.id, input.id},
      [gamma, beta, input, normalized, inv_std, n, d](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gm = t.value(gamma);
        if (Tensor* dg = t.grad_sink(gamma.id)) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) (*dg)[k] += g.at(i, k) * normalized.at(i, k);
        }
        if (Tensor* db = t.grad_sink(beta.id)) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) (*db)[k] += g.at(i, k);
        }
        if (Tensor* dh = t.grad_sink(input.id)) {
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t i = 0; i < n; ++i) {
            double mean_dxhat = 0.0;
            double mean_dxhat_xhat = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
              const double dxhat = g.at(i, k) * gm[k];
              mean_dxhat += dxhat;
              mean_dxhat_xhat += dxhat * normalized.at(i, k);
            }
            mean_dxhat *= inv_d;
            mean_dxhat_xhat *= inv_d;
            for (std::size_t k = 0; k < d; ++k) {
              const double dxhat = g.at(i, k) * gm[k];
              dh->at(i, k) += inv_std[i] *
                              (dxhat - mean_dxhat - normalized.at(i, k) * mean_dxhat_xhat);
            }
          }
        }
      });
}

Var softmax_rows(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  const std::size_t n = in.rows();
  const std::size_t m = in.cols();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) peak = std::max(peak, in.at(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      out.at(i, j) = std::exp(in.at(i, j) - peak);
      total += out.at(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) /= total;
  }
  return tape.record(std::move(out), {x.id}, [x, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    // Output of this node is needed; it is the value stored at `self`.
    const Tensor& y = t.value(self);
    if (Tensor* d = t.grad_sink(x.id)) {
      for (std::size_t i = 0; i < n; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < m; ++j) dot += g.at(i, j) * y.at(i, j);
        for (std::size_t j = 0; j < m; ++j) d->at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    }
  });
}

Var sum(Tape& tape, Var x) {
  double total = 0.0;
  for (double v : tape.value(x).values()) total += v;
  return tape.record(Tensor::scalar(total), {x.id}, [x](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (Tensor* d = t.grad_sink(x.id)) {
      for (auto& v : d->values()) v += g;
    }
  });
}

Var reshape(Tape& tape, Var x, Shape shape) {
  Tensor out = tape.value(x);
  out.reshape(std::move(shape));
  return tape.record(std::move(out), {x.id}, [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* d = t.grad_sink(x.id)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*d)[i] += g[i];
    }
  });
}

Var interleave_rows(Tape& tape, Var a, Var b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  require_rank2(x, "interleave_rows", "a");
  require_same_shape(x, y, "interleave_rows");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Tensor out({2 * n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.at(2 * i, k) = x.at(i, k);
      out.at(2 * i + 1, k) = y.at(i, k);
    }
  }
  return tape.record(std::move(out), {a.id, b.id}, [a, b, n, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (Tensor* da = t.grad_sink(a.id)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) da->at(i, k) += g.at(2 * i, k);
    }
    if (Tensor* db = t.grad_sink(b.id)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) db->at(i, k) += g.at(2 * i + 1, k);
    }
  });
}

Var group_scores(Tape& tape, Var q, Var k, std::size_t group, double factor) {
  const Tensor& qv = tape.value(q);
  const Tensor& kv = tape.value(k);
  require_rank2(qv, "group_scores", "q");
  require_same_shape(qv, kv, "group_scores");
  const std::size_t n = qv.rows();
  const std::size_t d = qv.cols();
  if (group == 0 || n % group != 0) {
    throw ShapeError("group_scores: " + std::to_string(n) + " rows not divisible into groups of " +
                     std::to_string(group));
  }
  Tensor out({n, group});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = (i / group) * group;
    for (std::size_t j = 0; j < group; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += qv.at(i, c) * kv.at(base + j, c);
      out.at(i, j) = factor * acc;
    }
  }
  return tape.record(std::move(out), {q.id, k.id},
                     [q, k, group, factor, n, d](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       const Tensor& qv = t.value(q);
                       const Tensor& kv = t.value(k);
                       Tensor* dq = t.grad_sink(q.id);
                       Tensor* dk = t.grad_sink(k.id);
                       for (std::size_t i = 0; i < n; ++i) {
                         const std::size_t base = (i / group) * group;
                         for (std::size_t j = 0; j < group; ++j) {
                           const double gij = factor * g.at(i, j);
                           for (std::size_t c = 0; c < d; ++c) {
                             if (dq) dq->at(i, c) += gij * kv.at(base + j, c);
                             if (dk) dk->at(base + j, c) += gij * qv.at(i, c);
                           }
                         }
                       }
                     });
}

Var group_mix(Tape& tape, Var p, Var v, std::size_t group) {
  const Tensor& pv = tape.value(p);
  const Tensor& vv = tape.value(v);
  require_rank2(pv, "group_mix", "p");
  require_rank2(vv, "group_mix", "v");
  const std::size_t n = vv.rows();
  const std::size_t d = vv.cols();
  if (pv.rows() != n || pv.cols() != group || group == 0 || n % group != 0) {
    throw ShapeError("group_mix: weights " + shape_string(pv.shape()) + " do not match values " +
                     shape_string(vv.shape()) + " with group " + std::to_string(group));
  }
  Tensor out({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = (i / group) * group;
    for (std::size_t j = 0; j < group; ++j) {
      const double w = pv.at(i, j);
      for (std::size_t c = 0; c < d; ++c) out.at(i, c) += w * vv.at(base + j, c);
    }
  }
  return tape.record(std::move(out), {p.id, v.id}, [p, v, group, n, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& pv = t.value(p);
    const Tensor& vv = t.value(v);
    Tensor* dp = t.grad_sink(p.id);
    Tensor* dv = t.grad_sink(v.id);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t base = (i / group) * group;
      for (std::size_t j = 0; j < group; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          acc += g.at(i, c) * vv.at(base + j, c);
          if (dv) dv->at(base + j, c) += pv.at(i, j) * g.at(i, c);
        }
        if (dp) dp->at(i, j) += acc;
      }
    }
  });
}

Var cumsum_offsets(Tape& tape, Var x, const Tensor& anchor, std::size_t modes,
                   std::size_t steps) {
  const Tensor& off = tape.value(x);
  require_rank2(off, "cumsum_offsets", "offsets");
  const std::size_t batch = off.rows();
  if (off.cols() != modes * steps * 2) {
    throw ShapeError("cumsum_offsets: expected " + std::to_string(modes * steps * 2) +
                     " columns, got " + std::to_string(off.cols()));
  }
  if (anchor.rows() != batch || anchor.cols() != 2) {
    throw ShapeError("cumsum_offsets: anchor must be " + std::to_string(batch) + "x2, got " +
                     shape_string(anchor.shape()));
  }
  Tensor out(off.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t m = 0; m < modes; ++m) {
      double px = anchor.at(b, 0);
      double py = anchor.at(b, 1);
      for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t col = (m * steps + s) * 2;
        px += off.at(b, col);
        py += off.at(b, col + 1);
        out.at(b, col) = px;
        out.at(b, col + 1) = py;
      }
    }
  }
  return tape.record(std::move(out), {x.id}, [x, batch, modes, steps](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor* d = t.grad_sink(x.id);
    if (!d) return;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t m = 0; m < modes; ++m) {
        double gx = 0.0;
        double gy = 0.0;
        for (std::size_t s = steps; s-- > 0;) {
          const std::size_t col = (m * steps + s) * 2;
          gx += g.at(b, col);
          gy += g.at(b, col + 1);
          d->at(b, col) += gx;
          d->at(b, col + 1) += gy;
        }
      }
    }
  });
}

Var variety_loss(Tape& tape, Var predictions, const Tensor& future, std::size_t modes,
                 std::size_t steps) {
  const Tensor& pred = tape.value(predictions);
  require_rank2(pred, "variety_loss", "predictions");
  const std::size_t batch = pred.rows();
  if (pred.cols() != modes * steps * 2 || future.rows() != batch ||
      future.cols() != steps * 2) {
    throw ShapeError("variety_loss: predictions " + shape_string(pred.shape()) +
                     " incompatible with future " + shape_string(future.shape()));
  }
  std::vector<std::size_t> best(batch, 0);
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < modes; ++m) {
      double err = 0.0;
      for (std::size_t s = 0; s < steps; ++s) {
        const double dx = pred.at(b, (m * steps + s) * 2) - future.at(b, 2 * s);
        const double dy = pred.at(b, (m * steps + s) * 2 + 1) - future.at(b, 2 * s + 1);
        err += dx * dx + dy * dy;
      }
      err /= static_cast<double>(steps);
      if (err < best_err) {
        best_err = err;
        best[b] = m;
      }
    }
    total += best_err;
    tape.note_branch(best[b]);
  }
  const double loss = total / static_cast<double>(batch);
  return tape.record(Tensor::scalar(loss), {predictions.id},
                     [predictions, future, best, batch, steps](Tape& t, std::size_t self) {
                       Tensor* d = t.grad_sink(predictions.id);
                       if (!d) return;
                       const Tensor& pred = t.value(predictions);
                       const double coef = t.grad(self)[0] * 2.0 /
                                           (static_cast<double>(steps) * static_cast<double>(batch));
                       for (std::size_t b = 0; b < batch; ++b) {
                         const std::size_t m = best[b];
                         for (std::size_t s = 0; s < steps; ++s) {
                           const std::size_t col = (m * steps + s) * 2;
                           d->at(b, col) += coef * (pred.at(b, col) - future.at(b, 2 * s));
                           d->at(b, col + 1) += coef * (pred.at(b, col + 1) - future.at(b, 2 * s + 1));
                         }
                       }
                     });
}

}  // namespace mosa::diff
