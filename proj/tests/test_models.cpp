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

#include "doctest.h"

#include <cmath>
#include <random>

#include "fedmig/error.hpp"
#include "fedmig/graph/local_graph.hpp"
#include "fedmig/models/checkpoint.hpp"
#include "fedmig/models/networks.hpp"
#include "fedmig/models/params.hpp"
#include "fedmig/numerics/tape.hpp"
#include "test_support.hpp"

using namespace fedmig;
using namespace fedmig::model;
using num::Tape;
using num::Tensor;
using num::Var;
using testing::random_tensor;

namespace {

ModelDims small_dims() {
  ModelDims d;
  d.feature_dim = 3;
  d.num_classes = 4;
  d.hidden = 5;
  d.latent = 6;
  d.disc_hidden = 5;
  d.proj_hidden = 5;
  d.proj_out = 3;
  return d;
}

// Perturbs every leaf of a bundle to break the symmetry of zero biases.
template <template <class> class P>
void jitter(P<Tensor>& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  visit_fields(params, [&](std::string_view, Tensor& t) {
    for (double& v : t.values()) v += u(rng);
  });
}

// Gradient check of `loss(bound params)` w.r.t. every leaf of `params`.
template <template <class> class P, class F>
void check_bundle_gradients(const P<Tensor>& params, F loss, double tol) {
  Tape tape;
  const P<Var> vars = bind(tape, params, true);
  tape.backward(loss(tape, vars));
  const P<Tensor> grads = gradients(tape, vars);

  std::vector<std::string> names;
  visit_fields(params, [&](std::string_view n, const Tensor&) { names.emplace_back(n); });
  std::size_t idx = 0;
  visit_fields(grads, [&](std::string_view, const Tensor& g) {
    const std::size_t target = idx++;
    const Tensor* leaf = nullptr;
    std::size_t k = 0;
    visit_fields(params, [&](std::string_view, const Tensor& t) {
      if (k++ == target) leaf = &t;
    });
    const Tensor fd = num::finite_difference_gradient(
        [&](const Tensor& x) {
          P<Tensor> copy = params;
          std::size_t j = 0;
          visit_fields(copy, [&](std::string_view, Tensor& t) {
            if (j++ == target) t = x;
          });
          Tape t2;
          return loss(t2, bind(t2, copy, false)).value().item();
        },
        *leaf);
    CAPTURE(names[target]);
    CHECK(num::relative_error(g, fd) < tol);
  });
}

}  // namespace

TEST_CASE("sage with identity self path and zero neighbor path") {
  ModelDims d = small_dims();
  d.feature_dim = 3;
  d.hidden = 3;
  GeneratorParams p = init_generator(d, 1);
  for (auto* layer : {&p.layer1, &p.layer2}) {
    layer->w_self = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    layer->w_neigh.fill(0.0);
    layer->bias.fill(0.0);
  }
  const Tensor x = Tensor::matrix(2, 3, {0.5, 1, 2, 3, 0, 4});
  num::Csr adj;
  adj.offsets = {0, 1, 2};
  adj.indices = {1, 0};
  Tape tape;
  const Var h = sage_forward(bind(tape, p, false), tape.constant(x), adj);
  CHECK(h.value() == x);
}

TEST_CASE("generator output shapes and zero adaptation weights") {
  const ModelDims d = small_dims();
  GeneratorParams p = init_generator(d, 3);
  p.adapter.weight.fill(0.0);
  p.adapter.bias = Tensor::row({1, 2, 3, 4, 5, 6});
  std::mt19937_64 rng(1);
  const num::Csr adj = testing::random_adjacency(5, 0.5, rng);
  Tape tape;
  const GeneratorOutput out =
      generator_forward(bind(tape, p, false), tape.constant(random_tensor(5, 3, rng)), adj);
  CHECK(out.logits.value().shape() == num::Shape{5, 4});
  CHECK(out.latent.value().shape() == num::Shape{5, 6});
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 6; ++c) CHECK(out.latent.value()(r, c) == c + 1.0);
}

TEST_CASE("classification path does not touch the adaptation layer") {
  const ModelDims d = small_dims();
  const GeneratorParams p = init_generator(d, 4);
  std::mt19937_64 rng(2);
  const num::Csr adj = testing::random_adjacency(6, 0.5, rng);
  const Tensor x = random_tensor(6, 3, rng);
  Tape tape;
  const GeneratorVars v = bind(tape, p, true);
  const GeneratorOutput out = generator_forward(v, tape.constant(x), adj);
  const std::size_t rows[] = {0, 1, 2};
  const std::size_t labels[] = {0, 3, 1};
  tape.backward(cross_entropy_rows(out.logits, rows, labels));
  const GeneratorParams g = gradients(tape, v);
  for (double val : g.adapter.weight.values()) CHECK(val == 0.0);
  for (double val : g.adapter.bias.values()) CHECK(val == 0.0);
  double head = 0.0;
  for (double val : g.head.weight.values()) head += std::abs(val);
  CHECK(head > 0.0);

  Tape tape2;
  const GeneratorVars v2 = bind(tape2, p, true);
  const GeneratorOutput out2 = generator_forward(v2, tape2.constant(x), adj);
  tape2.backward(sum(mul(out2.latent, out2.latent)));
  const GeneratorParams g2 = gradients(tape2, v2);
  for (double val : g2.head.weight.values()) CHECK(val == 0.0);
}

TEST_CASE("generator gradients match finite differences") {
  const ModelDims d = small_dims();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    GeneratorParams p = init_generator(d, static_cast<std::uint64_t>(trial));
    jitter(p, rng);
    const num::Csr adj = testing::random_adjacency(6, 0.4, rng);
    const Tensor x = random_tensor(6, 3, rng);
    const Tensor w = random_tensor(4, 1, rng);
    CAPTURE(trial);
    check_bundle_gradients(
        p,
        [&](Tape& t, const GeneratorVars& v) {
          const GeneratorOutput out = generator_forward(v, t.constant(x), adj);
          return add(mean(out.latent), sum(matmul(out.logits, t.constant(w))));
        },
        1e-4);
  }
}

TEST_CASE("sage output is permutation equivariant") {
  const ModelDims d = small_dims();
  const GeneratorParams p = init_generator(d, 9);
  std::mt19937_64 rng(10);
  const std::size_t n = 7;
  const num::Csr adj = testing::random_adjacency(n, 0.5, rng);
  const Tensor x = random_tensor(n, 3, rng);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = (3 * i + 2) % n;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : adj.neighbors(i))
      if (i < j) edges.emplace_back(perm[i], perm[j]);
  Tensor px = Tensor::zeros(n, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) px(perm[i], c) = x(i, c);
  Tape tape;
  const Tensor a = sage_forward(bind(tape, p, false), tape.constant(x), adj).value();
  const Tensor b = sage_forward(bind(tape, p, false), tape.constant(px),
                                graph::build_symmetric_csr(n, edges))
                       .value();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < a.cols(); ++c) CHECK(b(perm[i], c) == doctest::Approx(a(i, c)));
}

TEST_CASE("discriminator rows are distributions") {
  const ModelDims d = small_dims();
  std::mt19937_64 rng(12);
  const DiscriminatorParams p = init_discriminator(d, 5);
  const Tensor out = evaluate_discriminator(p, random_tensor(8, 6, rng, -5, 5));
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double s = 0.0;
    for (double v : out.row_span(r)) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  DiscriminatorParams zero = p;
  visit_fields(zero, [](std::string_view, Tensor& t) { t.fill(0.0); });
  const Tensor uni = evaluate_discriminator(zero, random_tensor(3, 6, rng));
  for (double v : uni.values()) CHECK(v == doctest::Approx(0.25));
  CHECK_THROWS_AS(evaluate_discriminator(p, Tensor::zeros(2, 5)), ShapeError);
}

TEST_CASE("discriminator gradients match finite differences") {
  const ModelDims d = small_dims();
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    DiscriminatorParams p = init_discriminator(d, static_cast<std::uint64_t>(trial));
    jitter(p, rng);
    const Tensor x = random_tensor(4, 6, rng);
    const Tensor w = random_tensor(4, 4, rng);
    CAPTURE(trial);
    check_bundle_gradients(
        p,
        [&](Tape& t, const DiscriminatorVars& v) {
          return sum(mul(discriminator_forward(v, t.constant(x)), t.constant(w)));
        },
        1e-4);
  }
}

TEST_CASE("projection shapes and zero input") {
  const ModelDims d = small_dims();
  ProjectionParams p = init_projection(d, 2);
  p.fc1.bias.fill(0.0);
  p.fc2.bias.fill(0.0);
  Tape tape;
  const Tensor z = projection_forward(bind(tape, p, false), tape.constant(Tensor::zeros(7, 6))).value();
  CHECK(z.shape() == num::Shape{7, 3});
  for (double v : z.values()) CHECK(v == 0.0);

  ModelDims wide;
  wide.feature_dim = 4;
  wide.num_classes = 2;
  const ProjectionParams q = init_projection(wide, 1);
  Tape t2;
  CHECK(projection_forward(bind(t2, q, false), t2.constant(Tensor::zeros(7, 64))).value().shape() ==
        num::Shape{7, 32});
}

TEST_CASE("projection gradients match finite differences") {
  const ModelDims d = small_dims();
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    ProjectionParams p = init_projection(d, static_cast<std::uint64_t>(trial));
    jitter(p, rng);
    const Tensor x = random_tensor(4, 6, rng);
    CAPTURE(trial);
    check_bundle_gradients(
        p,
        [&](Tape& t, const ProjectionVars& v) {
          Var z = projection_forward(v, t.constant(x));
          return mean(mul(z, z));
        },
        1e-4);
  }
}

TEST_CASE("initialization is seeded and bounded") {
  const ModelDims d = small_dims();
  CHECK(to_checkpoint(init_generator(d, 1)) == to_checkpoint(init_generator(d, 1)));
  CHECK(to_checkpoint(init_generator(d, 1)) != to_checkpoint(init_generator(d, 2)));
  const GeneratorParams p = init_generator(d, 1);
  const double bound = std::sqrt(6.0 / (3 + 5));
  for (double v : p.layer1.w_self.values()) CHECK(std::abs(v) <= bound);
  CHECK(all_finite(p));
  CHECK(parameter_count(p) == 3 * 5 * 2 + 5 + 5 * 5 * 2 + 5 + 5 * 4 + 4 + 5 * 6 + 6);
}

TEST_CASE("checkpoints round trip bit-exactly") {
  const ModelDims d = small_dims();
  std::mt19937_64 rng(15);
  GeneratorParams g = init_generator(d, 3);
  jitter(g, rng);
  g.head.bias[0] = 0.1 + 0.2;  // not representable in short decimal
  GeneratorParams g2 = init_generator(d, 99);
  from_checkpoint(to_checkpoint(g), g2);
  CHECK(to_checkpoint(g2) == to_checkpoint(g));
  CHECK(g2.head.bias[0] == g.head.bias[0]);

  DiscriminatorParams disc = init_discriminator(d, 4), disc2 = init_discriminator(d, 5);
  from_checkpoint(to_checkpoint(disc), disc2);
  CHECK(named_tensors(disc2).back().tensor == named_tensors(disc).back().tensor);

  CHECK_THROWS(from_checkpoint(to_checkpoint(disc), g2));
  CHECK_THROWS(from_checkpoint("{not json", g2));
}

TEST_CASE("argmax rows picks the first maximum") {
  CHECK(argmax_rows(Tensor::matrix(2, 3, {0, 2, 2, 5, 1, 0})) == std::vector<std::size_t>{1, 0});
}
