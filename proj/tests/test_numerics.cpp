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

#include <cmath>
#include <random>

#include "doctest.h"
#include "fedmig/error.hpp"
#include "fedmig/graph/local_graph.hpp"
#include "fedmig/numerics/adam.hpp"
#include "fedmig/numerics/gradcheck.hpp"
#include "fedmig/numerics/tape.hpp"
#include "test_support.hpp"

using namespace fedmig;
using num::Tape;
using num::Tensor;
using num::Var;
using testing::gradient_error;
using testing::random_tensor;

TEST_CASE("adam matches a hand-evaluated scalar recurrence") {
  // Frozen values of the bias-corrected update for p0 = 0.5, grads 1, 0, 0.
  const double expected[] = {0.4900000001, 0.4832994176534189, 0.47811984801832375};
  Tensor p = Tensor::row({0.5});
  num::AdamState st(p.shape());
  const double grads[] = {1.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    num::adam_step(p, Tensor::row({grads[k]}), st);
    CHECK(st.step_count == static_cast<std::size_t>(k + 1));
    CHECK(p[0] == doctest::Approx(expected[k]).epsilon(1e-14));
  }
  CHECK(st.second_moment[0] >= 0.0);
}

TEST_CASE("adam first step moves by about the learning rate") {
  Tensor p = Tensor::row({3.0, -2.0});
  num::AdamState st(p.shape());
  num::adam_step(p, Tensor::row({1.0, -1.0}), st);
  CHECK(p[0] == doctest::Approx(3.0 - 0.01).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.01).epsilon(1e-9));
}

TEST_CASE("adam with zero gradient and zero moments is the identity") {
  Tensor p = Tensor::matrix(2, 2, {1, -2, 3.5, 0});
  const Tensor before = p;
  num::AdamState st(p.shape());
  num::adam_step(p, Tensor::zeros(2, 2), st);
  CHECK(p == before);
}

TEST_CASE("adam rejects mismatched shapes") {
  Tensor p = Tensor::zeros(2, 2);
  num::AdamState st(p.shape());
  CHECK_THROWS_AS(num::adam_step(p, Tensor::zeros(1, 4), st), ShapeError);
}

TEST_CASE("finite differences of simple functions") {
  const Tensor x = Tensor::row({1.0, 2.0});
  const Tensor ones = num::finite_difference_gradient(
      [](const Tensor& t) { return t[0] + t[1]; }, x);
  CHECK(ones[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ones[1] == doctest::Approx(1.0).epsilon(1e-9));
  const Tensor g = num::finite_difference_gradient(
      [](const Tensor& t) { return 0.5 * (t[0] * t[0] + t[1] * t[1]); }, x);
  CHECK(std::abs(g[0] - 1.0) < 1e-8);
  CHECK(std::abs(g[1] - 2.0) < 1e-8);
  CHECK_THROWS_AS(num::finite_difference_gradient(
                      [](const Tensor& t) { return std::log(t[0] - 1.0); }, x),
                  NumericError);
}

TEST_CASE("relative error") {
  CHECK(num::relative_error(Tensor::row({1, 0}), Tensor::row({1, 0})) == 0.0);
  CHECK(num::relative_error(Tensor::row({3, 4}), Tensor::row({0, 0})) ==
        doctest::Approx(1.0));
}

TEST_CASE("tensor construction and shape checks") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a(1, 2) == 6.0);
  CHECK(Tensor::scalar(4.0).item() == 4.0);
  CHECK_THROWS(a.item());
  Tensor b = a;
  b[0] = std::nan("");
  CHECK_FALSE(b.all_finite());
}

TEST_CASE("matmul forward") {
  Tape t;
  Var a = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  Var b = t.constant(Tensor::matrix(2, 2, {5, 6, 7, 8}));
  CHECK(matmul(a, b).value() == Tensor::matrix(2, 2, {19, 22, 43, 50}));
  Var c = t.constant(Tensor::zeros(3, 2));
  CHECK_THROWS_AS(matmul(a, c), ShapeError);
}

TEST_CASE("softmax rows") {
  Tape t;
  const Tensor s = softmax_rows(t.constant(Tensor::matrix(2, 2, {0, 0, 1000, 0}))).value();
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK(s(0, 1) == doctest::Approx(0.5));
  CHECK(s(1, 0) == doctest::Approx(1.0));
  CHECK(s(1, 1) < 1e-300);
  CHECK(s.all_finite());

  std::mt19937_64 rng(11);
  const Tensor x = random_tensor(5, 7, rng, -20, 20);
  const Tensor p = num::softmax_rows(x);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double sum = 0;
    for (double v : p.row_span(r)) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("softmax jacobian matches finite differences") {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(1, 4, rng, -2, 2);
  for (std::size_t k = 0; k < 4; ++k) {
    const double err = gradient_error(
        [k](Tape& t, Var v) {
          Tensor pick = Tensor::zeros(4, 1);
          pick[k] = 1.0;
          return sum(matmul(softmax_rows(v), t.constant(pick)));
        },
        x);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("neighbor mean aggregation") {
  num::Csr adj;
  adj.offsets = {0, 2, 3, 4, 4};
  adj.indices = {1, 2, 0, 0};
  Tape t;
  const Tensor x = Tensor::matrix(4, 2, {9, 9, 1, 1, 3, 3, 7, 7});
  const Tensor out = neighbor_mean_aggregate(t.constant(x), adj).value();
  CHECK(out(0, 0) == 2.0);
  CHECK(out(0, 1) == 2.0);
  CHECK(out(1, 0) == 9.0);
  CHECK(out(3, 0) == 0.0);
  CHECK(out(3, 1) == 0.0);

  num::Csr bad = adj;
  bad.indices[0] = 17;
  CHECK_THROWS_AS(num::neighbor_mean_aggregate(x, bad), StructuralError);
  CHECK_THROWS_AS(num::neighbor_mean_aggregate(Tensor::zeros(3, 2), adj), ShapeError);
}

TEST_CASE("neighbor mean aggregation gradient on a random graph") {
  std::mt19937_64 rng(5);
  const num::Csr adj = testing::random_adjacency(6, 0.5, rng);
  const Tensor x = random_tensor(6, 3, rng);
  const double err =
      gradient_error([&](Tape&, Var v) { return sum(neighbor_mean_aggregate(v, adj)); }, x);
  CHECK(err < 1e-5);
}

TEST_CASE("neighbor mean aggregation is permutation equivariant") {
  std::mt19937_64 rng(8);
  const std::size_t n = 9;
  const num::Csr adj = testing::random_adjacency(n, 0.4, rng);
  const Tensor x = random_tensor(n, 4, rng);
  std::vector<std::size_t> perm(n);  // new id of node i
  for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 4 + 3) % n;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : adj.neighbors(i))
      if (i < j) edges.emplace_back(perm[i], perm[j]);
  const num::Csr padj = graph::build_symmetric_csr(n, edges);
  Tensor px = Tensor::zeros(n, 4);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 4; ++c) px(perm[i], c) = x(i, c);
  const Tensor a = num::neighbor_mean_aggregate(x, adj);
  const Tensor b = num::neighbor_mean_aggregate(px, padj);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 4; ++c) CHECK(b(perm[i], c) == doctest::Approx(a(i, c)));
}

TEST_CASE("primitive gradients on random inputs") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor(4, 5, rng);
    const Tensor w = random_tensor(5, 3, rng);
    const Tensor r = random_tensor(1, 5, rng);
    const Tensor y = random_tensor(4, 5, rng);
    CAPTURE(trial);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(matmul(v, t.constant(w))); }, x) < 1e-6);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(matmul(t.constant(w), v)); },
                         random_tensor(3, 4, rng)) < 1e-6);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(mul(transpose(v), transpose(t.constant(y)))); }, x) < 1e-6);
    CHECK(gradient_error([&](Tape&, Var v) { return mean(mul(v, v)); }, x) < 1e-6);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(sub(scale(v, 3.0), t.constant(y))); }, x) < 1e-6);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(mul(add_row(t.constant(y), v), t.constant(y))); }, r) < 1e-6);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(mul(relu(v), t.constant(y))); }, x) < 1e-6);
    CHECK(gradient_error([&](Tape&, Var v) { return sum(log_clamped(softmax_rows(v))); }, x) < 1e-6);
    CHECK(gradient_error([&](Tape& t, Var v) { return sum(mul(l2_normalize_rows(v), t.constant(y))); }, x) < 1e-6);
    const std::size_t rows[] = {0, 2, 3};
    const std::size_t labels[] = {4, 1, 0};
    CHECK(gradient_error([&](Tape&, Var v) { return cross_entropy_rows(v, rows, labels); }, x) < 1e-6);
  }
}

TEST_CASE("log clamp floors the argument") {
  Tape t;
  Var p = t.param(Tensor::row({0.0, 0.5}));
  Var y = sum(log_clamped(p));
  CHECK(y.value().item() == doctest::Approx(std::log(1e-12) + std::log(0.5)));
  t.backward(y);
  CHECK(t.grad(p)[0] == 0.0);
  CHECK(t.grad(p)[1] == doctest::Approx(2.0));
}

TEST_CASE("gradients accumulate over fan-out and reset on zero_grad") {
  Tape t;
  Var x = t.param(Tensor::row({2.0}));
  Var y = add(mul(x, x), scale(x, 3.0));  // 2x + 3
  t.backward(sum(y));
  CHECK(t.grad(x)[0] == doctest::Approx(7.0));
  t.zero_grad();
  CHECK_FALSE(t.has_grad(x));
}

TEST_CASE("backward visits each recorded primitive once") {
  Tape t;
  Var x = t.param(Tensor::row({1.0, 2.0}));
  Var c = t.constant(Tensor::row({5.0, 5.0}));
  Var a = mul(x, c);       // 1
  Var b = relu(a);         // 2
  Var s = sum(add(a, b));  // 3, 4
  t.backward(s);
  CHECK(t.last_backward_visits() == 4);
  CHECK(t.grad(x) == Tensor::row({10.0, 10.0}));
}

TEST_CASE("detached values carry no gradient") {
  Tape t;
  Var x = t.param(Tensor::row({1.0, 2.0}));
  Var y = sum(mul(detach(x), x));
  t.backward(y);
  CHECK(t.grad(x) == Tensor::row({1.0, 2.0}));
}

TEST_CASE("backward needs a scalar") {
  Tape t;
  Var x = t.param(Tensor::row({1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), ShapeError);
}
