// Copyright 2026 The fedmig Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "fedmig/numerics/tensor.hpp"

namespace fedmig::num {

class Tape;

/// Handle to a tensor recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const;
  const Tensor& value() const;
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = std::numeric_limits<std::size_t>::max();
};

/// Reverse-mode computation record.
///
/// Every primitive appends one record whose inputs were recorded earlier, so
/// the record list is topologically ordered by construction. `backward`
/// walks it once in reverse. Gradients accumulate additively; `zero_grad`
/// clears them.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var param(const Tensor& value) { return leaf(value, true); }

  // Appends a primitive. `fn` is dropped when no input requires a gradient.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  bool has_grad(Var v) const;
  // Gradient accumulated for v; zeros when nothing reached it.
  Tensor grad(Var v) const;

  // Accumulator for an input inside a backward function. Allocated lazily.
  Tensor& accumulator(Var v);

  void backward(Var loss);
  void zero_grad();

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t last_backward_visits() const noexcept { return visits_; }

 private:
  struct Node {
    Tensor value;
    std::optional<Tensor> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check(Var v) const;

  std::deque<Node> nodes_;  // stable references across record()
  std::size_t visits_ = 0;
};

// Primitives. All operate on rank-2 views (rows() x cols()).
Var detach(Var a);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_row(Var a, Var row);
Var relu(Var a);
Var softmax_rows(Var logits);
Var log_clamped(Var a, double floor = 1e-12);
Var sum(Var a);
Var mean(Var a);
Var l2_normalize_rows(Var a, double floor = 1e-12);
// Mean negative log-softmax of `labels[i]` in row `rows[i]`.
Var cross_entropy_rows(Var logits, std::span<const std::size_t> rows,
                       std::span<const std::size_t> labels);
// Row i = mean of the rows of `feats` listed as neighbors of i; zero row for
// an isolated node. `adjacency` must outlive the backward pass.
Var neighbor_mean_aggregate(Var feats, const Csr& adjacency);

// Value-only helpers built on the same kernels.
Tensor softmax_rows(const Tensor& logits);
Tensor neighbor_mean_aggregate(const Tensor& feats, const Csr& adjacency);

inline constexpr double kProbFloor = 1e-12;

}  // namespace fedmig::num
