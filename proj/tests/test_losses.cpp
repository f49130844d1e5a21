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

#include <algorithm>
#include <cmath>
#include <random>

#include "fedmig/error.hpp"
#include "fedmig/losses/losses.hpp"
#include "fedmig/models/networks.hpp"
#include "fedmig/models/params.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fedmig;
using loss::ClassDistribution;
using num::Tape;
using num::Tensor;
using num::Var;
using testing::gradient_error;
using testing::random_tensor;

namespace {

ClassDistribution random_distribution(std::size_t h, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  ClassDistribution d;
  double total = 0.0;
  for (std::size_t i = 0; i < h; ++i) {
    d.probs.push_back(g(rng) + 1e-3);
    total += d.probs.back();
  }
  for (double& p : d.probs) p /= total;
  return d;
}

model::ModelDims dims(std::size_t latent, std::size_t classes) {
  model::ModelDims d;
  d.feature_dim = 2;
  d.num_classes = classes;
  d.latent = latent;
  d.disc_hidden = 6;
  d.proj_hidden = 6;
  d.proj_out = 4;
  return d;
}

std::vector<double> row_of(const Tensor& t, std::size_t r) {
  auto s = t.row_span(r);
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("gan loss equals the integral form on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> classes(2, 6), gens(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = classes(rng);
    const ClassDistribution p = random_distribution(h, rng);
    std::vector<ClassDistribution> g;
    std::vector<std::vector<double>> raw;
    const std::size_t k = gens(rng);
    for (std::size_t i = 0; i < k; ++i) {
      g.push_back(random_distribution(h, rng));
      raw.push_back(g.back().probs);
    }
    CAPTURE(trial);
    CHECK(std::abs(loss::gan_diversity_loss(p, g) - oracle::gan_integral_form(p.probs, raw)) <=
          1e-10);
  }
}

TEST_CASE("gan loss for one generator equal to the data distribution") {
  // -3 ln 3 + 2 ln 2: the generator term cancels against its mixture shift.
  const double expected = -1.9095425048844386;
  const ClassDistribution p{{0.3, 0.7}};
  const std::vector<ClassDistribution> g{p};
  CHECK(std::abs(oracle::gan_integral_form(p.probs, {p.probs}) - expected) <= 1e-12);
  CHECK(std::abs(loss::gan_diversity_loss(p, g) - expected) <= 1e-10);
}

TEST_CASE("gan loss is invariant to generator order") {
  std::mt19937_64 rng(4);
  const ClassDistribution p = random_distribution(5, rng);
  std::vector<ClassDistribution> g;
  for (int i = 0; i < 4; ++i) g.push_back(random_distribution(5, rng));
  const double a = loss::gan_diversity_loss(p, g);
  std::reverse(g.begin(), g.end());
  CHECK(loss::gan_diversity_loss(p, g) == doctest::Approx(a).epsilon(1e-14));
  CHECK_THROWS_AS(loss::gan_diversity_loss(p, std::vector<ClassDistribution>{}), ConfigError);
}

TEST_CASE("gan loss gradient w.r.t. the generator sum") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 2 + static_cast<std::size_t>(trial % 5);
    const Tensor p = random_distribution(h, rng).as_row();
    Tensor s = Tensor::zeros(1, h);
    for (int k = 0; k < 3; ++k) {
      const ClassDistribution d = random_distribution(h, rng);
      for (std::size_t i = 0; i < h; ++i) s[i] += d.probs[i];
    }
    CHECK(gradient_error([&](Tape& t, Var v) { return loss::gan_diversity_loss(t.constant(p), v, h); },
                         s) < 1e-4);
  }
}

TEST_CASE("jensen shannon divergence") {
  const double hand = 0.21576155433883565;
  const ClassDistribution half{{0.5, 0.5}}, left{{1.0, 0.0}}, right{{0.0, 1.0}};
  CHECK(std::abs(oracle::jsd(half.probs, left.probs) - hand) <= 1e-12);
  CHECK(std::abs(loss::jensen_shannon_divergence(half, left) - hand) <= 1e-12);
  CHECK(std::abs(loss::jensen_shannon_divergence(left, right) - std::log(2.0)) <= 1e-12);
  CHECK(loss::jensen_shannon_divergence(half, half) == 0.0);
  CHECK_THROWS_AS(loss::jensen_shannon_divergence(ClassDistribution{{0.5, 0.6}}, half),
                  ConfigError);

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const ClassDistribution p = random_distribution(4, rng), q = random_distribution(4, rng);
    const double pq = loss::jensen_shannon_divergence(p, q);
    CHECK(std::abs(pq - loss::jensen_shannon_divergence(q, p)) <= 1e-12);
    CHECK(std::abs(pq - oracle::jsd(p.probs, q.probs)) <= 1e-12);
    CHECK(pq >= 0.0);
    CHECK(pq <= std::log(2.0) + 1e-12);
  }
}

TEST_CASE("classification loss") {
  Tape t;
  const std::vector<std::size_t> labels{0, 1, 2, 3};
  const std::vector<bool> all(4, true);
  CHECK(loss::classification_loss(t.constant(Tensor::zeros(4, 4)), labels, all).value().item() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  Tensor peaked = Tensor::zeros(4, 4);
  for (std::size_t i = 0; i < 4; ++i) peaked(i, i) = 1000.0;
  CHECK(loss::classification_loss(t.constant(peaked), labels, all).value().item() <= 1e-6);
  CHECK_THROWS_AS(loss::classification_loss(t.constant(peaked), labels, std::vector<bool>(4, false)),
                  ConfigError);

  std::mt19937_64 rng(7);
  const Tensor x = random_tensor(6, 3, rng, -3, 3);
  const std::vector<std::size_t> y{0, 2, 1, 1, 0, 2};
  const std::vector<bool> mask{true, false, true, true, false, true};
  double expected = 0.0, n = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    if (!mask[i]) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < 3; ++c) z += std::exp(x(i, c));
    expected += std::log(z) - x(i, y[i]);
    n += 1.0;
  }
  expected /= n;
  CHECK(std::abs(loss::classification_loss(t.constant(x), y, mask).value().item() - expected) <=
        1e-12);
  for (int trial = 0; trial < 20; ++trial) {
    CHECK(gradient_error([&](Tape&, Var v) { return loss::classification_loss(v, y, mask); },
                         random_tensor(6, 3, rng, -3, 3)) < 1e-4);
  }
}

TEST_CASE("discriminator loss") {
  const model::ModelDims d = dims(3, 2);
  model::DiscriminatorParams zero = model::init_discriminator(d, 1);
  model::visit_fields(zero, [](std::string_view, Tensor& t) { t.fill(0.0); });
  std::mt19937_64 rng(8);
  {
    Tape t;
    const Var l = loss::discriminator_loss(model::bind(t, zero, false),
                                           t.constant(random_tensor(2, 3, rng)),
                                           t.constant(random_tensor(2, 3, rng)));
    CHECK(l.value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }

  const model::DiscriminatorParams disc = model::init_discriminator(dims(5, 4), 2);
  const Tensor synth = random_tensor(3, 5, rng), protos = random_tensor(3, 5, rng);
  const Tensor ds = model::evaluate_discriminator(disc, synth);
  const Tensor dp = model::evaluate_discriminator(disc, protos);
  double expected = 0.0;
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t y = 0; y < 4; ++y) expected -= dp(h, y) * std::log(ds(h, y));
  expected /= 3.0;
  Tape t;
  const Var l = loss::discriminator_loss(model::bind(t, disc, false), t.constant(synth),
                                         t.constant(protos));
  CHECK(std::abs(l.value().item() - expected) <= 1e-12);

  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = random_tensor(3, 5, rng);
    CHECK(gradient_error(
              [&](Tape& tp, Var v) {
                return loss::discriminator_loss(model::bind(tp, disc, false), v, tp.constant(p));
              },
              random_tensor(3, 5, rng)) < 1e-4);
  }
}

TEST_CASE("discriminator loss with a one-hot target on itself") {
  const model::ModelDims d = dims(2, 2);
  model::DiscriminatorParams disc = model::init_discriminator(d, 1);
  model::visit_fields(disc, [](std::string_view, Tensor& t) { t.fill(0.0); });
  disc.fc3.bias = Tensor::row({60.0, 0.0});
  Tape t;
  const Tensor x = Tensor::matrix(1, 2, {0.3, -0.1});
  const Var l = loss::discriminator_loss(model::bind(t, disc, false), t.constant(x), t.constant(x));
  CHECK(l.value().item() <= 1e-12);
}

TEST_CASE("discriminator target is gradient-blocked") {
  const model::DiscriminatorParams disc = model::init_discriminator(dims(4, 3), 5);
  std::mt19937_64 rng(9);
  Tape t;
  Var synth = t.param(random_tensor(2, 4, rng));
  Var protos = t.param(random_tensor(2, 4, rng));
  t.backward(loss::discriminator_loss(model::bind(t, disc, false), synth, protos));
  CHECK(t.has_grad(synth));
  const Tensor g = t.grad(protos);
  for (double v : g.values()) CHECK(v == 0.0);
}

TEST_CASE("infonce loss") {
  const model::ModelDims d = dims(4, 4);
  const model::ProjectionParams proj = model::init_projection(d, 3);
  const std::size_t positive[] = {0, 1, 2, 3};

  SUBCASE("identical projected vectors give ln H") {
    Tape t;
    const Tensor same = Tensor::filled(4, 4, 0.5);
    const Var l = loss::infonce_mi_loss(model::bind(t, proj, false), t.constant(same), positive,
                                        t.constant(same));
    CHECK(l.value().item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("dominant positive pairs drive the loss to zero") {
    model::ProjectionParams id = proj;
    id.fc1.weight = Tensor::zeros(4, 6);
    id.fc2.weight = Tensor::zeros(6, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      id.fc1.weight(i, i) = 1.0;
      id.fc2.weight(i, i) = 1.0;
    }
    id.fc1.bias.fill(0.0);
    id.fc2.bias.fill(0.0);
    Tensor basis = Tensor::zeros(4, 4);
    for (std::size_t i = 0; i < 4; ++i) basis(i, i) = 1.0;
    Tape t;
    const Var l = loss::infonce_mi_loss(model::bind(t, id, false), t.constant(basis), positive,
                                        t.constant(basis), 1e-3);
    CHECK(l.value().item() <= 1e-6);
  }

  SUBCASE("random case matches a per-term sum") {
    std::mt19937_64 rng(10);
    const Tensor lp = random_tensor(3, 4, rng), gen = random_tensor(4, 4, rng);
    const std::size_t pos[] = {0, 2, 3};
    Tape t;
    const model::ProjectionVars pv = model::bind(t, proj, false);
    const Tensor zl = model::projection_forward(pv, t.constant(lp)).value();
    const Tensor zg = model::projection_forward(pv, t.constant(gen)).value();
    auto unit = [](std::vector<double> v) {
      double n = 0.0;
      for (double x : v) n += x * x;
      n = std::sqrt(n);
      for (double& x : v) x /= n;
      return v;
    };
    double expected = 0.0;
    for (std::size_t r = 0; r < 3; ++r) {
      const auto a = unit(row_of(zl, r));
      double denom = 0.0, numer = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        const auto b = unit(row_of(zg, j));
        double dot = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) dot += a[c] * b[c];
        denom += std::exp(dot);
        if (j == pos[r]) numer = dot;
      }
      expected += -(numer - std::log(denom));
    }
    expected /= 3.0;
    const Var l = loss::infonce_mi_loss(pv, t.constant(lp), pos, t.constant(gen));
    CHECK(std::abs(l.value().item() - expected) <= 1e-12);
    CHECK(l.value().item() >= 0.0);
  }

  SUBCASE("gradients w.r.t. generated features and prototypes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const Tensor lp = random_tensor(4, 4, rng), gen = random_tensor(4, 4, rng);
      CHECK(gradient_error(
                [&](Tape& t, Var v) {
                  return loss::infonce_mi_loss(model::bind(t, proj, false), t.constant(lp),
                                               positive, v);
                },
                gen) < 1e-4);
      CHECK(gradient_error(
                [&](Tape& t, Var v) {
                  return loss::infonce_mi_loss(model::bind(t, proj, false), v, positive,
                                               t.constant(gen), 0.5);
                },
                lp) < 1e-4);
    }
  }

  SUBCASE("errors") {
    Tape t;
    const std::size_t none[] = {0};
    CHECK_THROWS_AS(loss::infonce_mi_loss(model::bind(t, proj, false), t.constant(Tensor::zeros(0, 4)),
                                          std::span<const std::size_t>{}, t.constant(Tensor::zeros(4, 4))),
                    ConfigError);
    CHECK_THROWS_AS(loss::infonce_mi_loss(model::bind(t, proj, false), t.constant(Tensor::zeros(1, 4)),
                                          none, t.constant(Tensor::zeros(4, 4)), 0.0),
                    ConfigError);
  }
}

TEST_CASE("composite loss") {
  const loss::LossBreakdown b = loss::composite_loss(1.0, 2.0, 3.0, 0.5, 0.1);
  CHECK(b.composite == doctest::Approx(2.3).epsilon(1e-15));
  CHECK(loss::composite_loss(0.7, 5.0, 9.0, 0.0, 0.0).composite == 0.7);
  CHECK_THROWS_AS(loss::composite_loss(1.0, 1.0, 1.0, -1.0, 0.0), ConfigError);

  // The composite gradient is the weighted sum of the component gradients.
  std::mt19937_64 rng(12);
  const Tensor x = random_tensor(3, 4, rng);
  const std::vector<std::size_t> labels{0, 3, 1};
  const std::vector<bool> mask(3, true);
  auto ce = [&](Tape&, Var v) { return loss::classification_loss(v, labels, mask); };
  auto sq = [&](Tape&, Var v) { return mean(mul(v, v)); };
  auto cube = [&](Tape&, Var v) { return sum(mul(mul(v, v), v)); };
  const double l1 = 0.3, l2 = 1e-2;
  const Tensor total = testing::analytic_gradient(
      [&](Tape& t, Var v) { return loss::composite_loss(ce(t, v), sq(t, v), cube(t, v), l1, l2); },
      x);
  const Tensor a = testing::analytic_gradient(ce, x), b2 = testing::analytic_gradient(sq, x),
               c = testing::analytic_gradient(cube, x);
  Tensor expected = a;
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] += l1 * b2[i] + l2 * c[i];
  CHECK(num::relative_error(total, expected) < 1e-6);

  Tape t;
  Var v = t.constant(x);
  const Var only_ce = loss::composite_loss(ce(t, v), Var{}, Var{}, l1, l2);
  CHECK(only_ce.value().item() == ce(t, v).value().item());
}

TEST_CASE("class distributions") {
  const ClassDistribution u = ClassDistribution::uniform(4);
  CHECK(u.is_normalized());
  const std::vector<ClassDistribution> two{u, ClassDistribution{{1, 0, 0, 0}}};
  const ClassDistribution s = loss::sum_distributions(two);
  CHECK(s.mass() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.probs[0] == 1.25);
  CHECK_FALSE(s.is_normalized());
}
