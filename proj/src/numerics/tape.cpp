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

#include "fedmig/numerics/tape.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fedmig/error.hpp"

namespace fedmig::num {

Tape& Var::tape() const {
  if (tape_ == nullptr) throw Error("use of an unbound Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(*this); }

bool Var::requires_grad() const { return tape().requires_grad(*this); }

void Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw Error("Var does not belong to this tape");
  }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), std::nullopt, requires_grad, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  bool any = false;
  for (const Var& in : inputs) {
    check(in);
    any = any || nodes_[in.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::nullopt, any,
                        any ? std::move(fn) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id_].value;
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.id_].requires_grad;
}

bool Tape::has_grad(Var v) const {
  check(v);
  return nodes_[v.id_].grad.has_value();
}

Tensor Tape::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id_];
  if (n.grad) return *n.grad;
  return Tensor(n.value.shape());
}

Tensor& Tape::accumulator(Var v) {
  check(v);
  Node& n = nodes_[v.id_];
  if (!n.grad) n.grad.emplace(n.value.shape());
  return *n.grad;
}

void Tape::backward(Var loss) {
  check(loss);
  if (nodes_[loss.id_].value.size() != 1) {
    throw ShapeError("backward() needs a scalar loss");
  }
  accumulator(loss)[0] += 1.0;
  visits_ = 0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.grad || !n.backward) continue;
    n.backward(*this, *n.grad);
    ++visits_;
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.reset();
}

namespace {

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() > 2) {
    throw ShapeError(fmt::format("{}: expected rank <= 2, got {}", what,
                                 shape_string(t.shape())));
  }
}

// c[n x m] += a[n x k] * b[k x m]
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* A = a.values().data();
  const double* B = b.values().data();
  double* C = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = C + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

// c[n x k] += a[n x m] * b[k x m]^T
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  const double* A = a.values().data();
  const double* B = b.values().data();
  double* C = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = A + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = B + p * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += arow[j] * brow[j];
      C[i * k + p] += acc;
    }
  }
}

// c[k x m] += a[n x k]^T * b[n x m]
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* A = a.values().data();
  const double* B = b.values().data();
  double* C = c.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* brow = B + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      double* crow = C + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

Var detach(Var a) { return a.tape().constant(a.value()); }

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError(fmt::format("matmul: {} x {} incompatible",
                                 shape_string(av.shape()),
                                 shape_string(bv.shape())));
  }
  Tensor out = Tensor::zeros(av.rows(), bv.cols());
  gemm_nn(av, bv, out);
  const Var inputs[] = {a, b};
  return a.tape().record(std::move(out), inputs,
                         [a, b](Tape& t, const Tensor& g) {
                           if (t.requires_grad(a)) {
                             gemm_nt(g, t.value(b), t.accumulator(a));
                           }
                           if (t.requires_grad(b)) {
                             gemm_tn(t.value(a), g, t.accumulator(b));
                           }
                         });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "transpose");
  const std::size_t n = av.rows(), m = av.cols();
  Tensor out = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out(j, i) = av(i, j);
  const Var inputs[] = {a};
  return a.tape().record(std::move(out), inputs,
                         [a, n, m](Tape& t, const Tensor& g) {
                           Tensor& acc = t.accumulator(a);
                           for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < m; ++j)
                               acc[i * m + j] += g(j, i);
                         });
}

namespace {

template <class Combine, class GradA, class GradB>
Var elementwise(Var a, Var b, const char* what, Combine combine, GradA da,
                GradB db) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, what);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = combine(av[i], bv[i]);
  const Var inputs[] = {a, b};
  return a.tape().record(
      std::move(out), inputs, [a, b, da, db](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        const Tensor& y = t.value(b);
        if (t.requires_grad(a)) {
          Tensor& acc = t.accumulator(a);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += da(g[i], x[i], y[i]);
        }
        if (t.requires_grad(b)) {
          Tensor& acc = t.accumulator(b);
          for (std::size_t i = 0; i < g.size(); ++i) acc[i] += db(g[i], x[i], y[i]);
        }
      });
}

}  // namespace

Var add(Var a, Var b) {
  return elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Var mul(Var a, Var b) {
  return elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  const Var inputs[] = {a};
  return a.tape().record(std::move(out), inputs,
                         [a, factor](Tape& t, const Tensor& g) {
                           Tensor& acc = t.accumulator(a);
                           for (std::size_t i = 0; i < g.size(); ++i)
                             acc[i] += g[i] * factor;
                         });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_rank2(av, "add_row");
  if (rv.size() != av.cols()) {
    throw ShapeError(fmt::format("add_row: row {} does not match {}",
                                 shape_string(rv.shape()),
                                 shape_string(av.shape())));
  }
  Tensor out = av;
  out.requires_grad = false;
  const std::size_t n = av.rows(), m = av.cols();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += rv[j];
  const Var inputs[] = {a, row};
  return a.tape().record(std::move(out), inputs,
                         [a, row, n, m](Tape& t, const Tensor& g) {
                           if (t.requires_grad(a)) {
                             Tensor& acc = t.accumulator(a);
                             for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
                           }
                           if (t.requires_grad(row)) {
                             Tensor& acc = t.accumulator(row);
                             for (std::size_t i = 0; i < n; ++i)
                               for (std::size_t j = 0; j < m; ++j)
                                 acc[j] += g[i * m + j];
                           }
                         });
}

Var relu(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  const Var inputs[] = {a};
  return a.tape().record(std::move(out), inputs, [a](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(a);
    Tensor& acc = t.accumulator(a);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) acc[i] += g[i];
  });
}

Tensor softmax_rows(const Tensor& logits) {
  require_rank2(logits, "softmax");
  Tensor out(logits.shape());
  const std::size_t n = logits.rows(), m = logits.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.values().data() + i * m;
    double* y = out.values().data() + i * m;
    const double mx = *std::max_element(z, z + m);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      y[j] = std::exp(z[j] - mx);
      total += y[j];
    }
    for (std::size_t j = 0; j < m; ++j) y[j] /= total;
  }
  return out;
}

Var softmax_rows(Var logits) {
  Tensor out = softmax_rows(logits.value());
  const Var inputs[] = {logits};
  Tensor y = out;
  return logits.tape().record(
      std::move(out), inputs, [logits, y = std::move(y)](Tape& t, const Tensor& g) {
        Tensor& acc = t.accumulator(logits);
        const std::size_t n = y.rows(), m = y.cols();
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < m; ++j) dot += g[i * m + j] * y[i * m + j];
          for (std::size_t j = 0; j < m; ++j)
            acc[i * m + j] += y[i * m + j] * (g[i * m + j] - dot);
        }
      });
}

Var log_clamped(Var a, double floor) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(av[i], floor));
  const Var inputs[] = {a};
  return a.tape().record(std::move(out), inputs,
                         [a, floor](Tape& t, const Tensor& g) {
                           const Tensor& x = t.value(a);
                           Tensor& acc = t.accumulator(a);
                           for (std::size_t i = 0; i < g.size(); ++i)
                             if (x[i] > floor) acc[i] += g[i] / x[i];
                         });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  double total = 0.0;
  for (double v : av.values()) total += v;
  const Var inputs[] = {a};
  return a.tape().record(Tensor::scalar(total), inputs,
                         [a](Tape& t, const Tensor& g) {
                           Tensor& acc = t.accumulator(a);
                           for (double& v : acc.values()) v += g[0];
                         });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var l2_normalize_rows(Var a, double floor) {
  const Tensor& av = a.value();
  require_rank2(av, "l2_normalize_rows");
  const std::size_t n = av.rows(), m = av.cols();
  Tensor out(av.shape());
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += av[i * m + j] * av[i * m + j];
    norms[i] = std::max(std::sqrt(s), floor);
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = av[i * m + j] / norms[i];
  }
  const Var inputs[] = {a};
  return a.tape().record(
      std::move(out), inputs,
      [a, norms = std::move(norms), floor, n, m](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor& acc = t.accumulator(a);
        for (std::size_t i = 0; i < n; ++i) {
          const double r = norms[i];
          if (r <= floor) {
            for (std::size_t j = 0; j < m; ++j) acc[i * m + j] += g[i * m + j] / r;
            continue;
          }
          double dot = 0.0;
          for (std::size_t j = 0; j < m; ++j) dot += g[i * m + j] * x[i * m + j];
          for (std::size_t j = 0; j < m; ++j) {
            const double y = x[i * m + j] / r;
            acc[i * m + j] += (g[i * m + j] - y * dot / r) / r;
          }
        }
      });
}

Var cross_entropy_rows(Var logits, std::span<const std::size_t> rows,
                       std::span<const std::size_t> labels) {
  const Tensor& z = logits.value();
  require_rank2(z, "cross_entropy_rows");
  if (rows.size() != labels.size()) {
    throw ShapeError("cross_entropy_rows: rows/labels length mismatch");
  }
  if (rows.empty()) throw ConfigError("cross_entropy_rows: no rows selected");
  const std::size_t m = z.cols();
  double total = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= z.rows() || labels[k] >= m) {
      throw ShapeError("cross_entropy_rows: index out of range");
    }
    const double* zr = z.values().data() + rows[k] * m;
    const double mx = *std::max_element(zr, zr + m);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::exp(zr[j] - mx);
    total += mx + std::log(s) - zr[labels[k]];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  const Var inputs[] = {logits};
  return logits.tape().record(
      Tensor::scalar(total * inv), inputs,
      [logits, r = std::vector<std::size_t>(rows.begin(), rows.end()),
       l = std::vector<std::size_t>(labels.begin(), labels.end()), inv,
       m](Tape& t, const Tensor& g) {
        const Tensor& zv = t.value(logits);
        Tensor& acc = t.accumulator(logits);
        std::vector<double> p(m);
        for (std::size_t k = 0; k < r.size(); ++k) {
          const double* zr = zv.values().data() + r[k] * m;
          const double mx = *std::max_element(zr, zr + m);
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            p[j] = std::exp(zr[j] - mx);
            s += p[j];
          }
          double* ar = acc.values().data() + r[k] * m;
          for (std::size_t j = 0; j < m; ++j) {
            const double target = j == l[k] ? 1.0 : 0.0;
            ar[j] += g[0] * inv * (p[j] / s - target);
          }
        }
      });
}

Tensor neighbor_mean_aggregate(const Tensor& feats, const Csr& adjacency) {
  require_rank2(feats, "neighbor_mean_aggregate");
  validate_csr(adjacency);
  if (adjacency.num_rows() != feats.rows()) {
    throw ShapeError(fmt::format(
        "neighbor_mean_aggregate: adjacency has {} rows, features {}",
        adjacency.num_rows(), feats.rows()));
  }
  const std::size_t n = feats.rows(), d = feats.cols();
  Tensor out(Shape{n, d});
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = adjacency.neighbors(i);
    if (nbrs.empty()) continue;
    double* o = out.values().data() + i * d;
    for (std::size_t j : nbrs) {
      const double* x = feats.values().data() + j * d;
      for (std::size_t c = 0; c < d; ++c) o[c] += x[c];
    }
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    for (std::size_t c = 0; c < d; ++c) o[c] *= inv;
  }
  return out;
}

Var neighbor_mean_aggregate(Var feats, const Csr& adjacency) {
  Tensor out = neighbor_mean_aggregate(feats.value(), adjacency);
  const Var inputs[] = {feats};
  return feats.tape().record(
      std::move(out), inputs, [feats, &adjacency](Tape& t, const Tensor& g) {
        Tensor& acc = t.accumulator(feats);
        const std::size_t d = acc.cols();
        for (std::size_t i = 0; i < adjacency.num_rows(); ++i) {
          const auto nbrs = adjacency.neighbors(i);
          if (nbrs.empty()) continue;
          const double inv = 1.0 / static_cast<double>(nbrs.size());
          const double* gi = g.values().data() + i * d;
          for (std::size_t j : nbrs) {
            double* a = acc.values().data() + j * d;
            for (std::size_t c = 0; c < d; ++c) a[c] += gi[c] * inv;
          }
        }
      });
}

}  // namespace fedmig::num
