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
#include "fedmig/privacy/dp.hpp"
#include "test_support.hpp"

using namespace fedmig;
using num::Tensor;

namespace {

dp::DpConfig enabled(double clip = 1.0) {
  dp::DpConfig cfg;
  cfg.enabled = true;
  cfg.clip_norm = clip;
  return cfg;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("gaussian sigma") {
  const double frozen = 4.844805262605389;  // sqrt(2 ln 1.25e5)
  CHECK(std::abs(dp::gaussian_sigma(1.0, 1e-5, 1.0) - frozen) <= 1e-12);
  CHECK(std::abs(dp::gaussian_sigma(1.0, 1e-5, 1.0) - std::sqrt(2.0 * std::log(1.25 / 1e-5))) <=
        1e-12);
  CHECK(dp::gaussian_sigma(2.0, 1e-5, 1.0) == dp::gaussian_sigma(1.0, 1e-5, 1.0) / 2.0);
  CHECK_THROWS_AS(dp::gaussian_sigma(1.0, 1e-5, 0.0), ConfigError);
  CHECK_THROWS_AS(dp::gaussian_sigma(0.0, 1e-5, 1.0), ConfigError);
  CHECK_THROWS_AS(dp::gaussian_sigma(1.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("clipping") {
  std::vector<double> x{6.0, 8.0};
  dp::clip_row(x, 1.0);
  CHECK(norm(x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x[0] == doctest::Approx(0.6));

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor t = testing::random_tensor(1, 7, rng, -5, 5);
    dp::clip_row(t.values(), 1.3);
    const Tensor once = t;
    dp::clip_row(t.values(), 1.3);
    CHECK(t == once);
  }

  std::vector<double> inside{0.1, 0.2};
  dp::clip_row(inside, 1.0);
  CHECK(inside == std::vector<double>{0.1, 0.2});
}

TEST_CASE("disabled config passes rows through") {
  std::mt19937_64 rng(2);
  const Tensor rows = testing::random_tensor(3, 4, rng, -10, 10);
  dp::DpConfig off;
  CHECK(dp::clip_and_perturb(rows, off, rng) == rows);
}

TEST_CASE("perturbation is reproducible under the seed") {
  std::mt19937_64 a(7), b(7);
  const Tensor rows = Tensor::matrix(2, 2, {3, 4, 0.1, 0.1});
  CHECK(dp::clip_and_perturb(rows, enabled(), a) == dp::clip_and_perturb(rows, enabled(), b));
}

TEST_CASE("empirical noise matches sigma") {
  const dp::DpConfig cfg = enabled(0.5);
  const double sigma = dp::gaussian_sigma(cfg.epsilon, cfg.delta, 2.0 * cfg.clip_norm);
  std::mt19937_64 rng(3);
  const std::size_t n = 10000, d = 4;
  const Tensor out = dp::clip_and_perturb(Tensor::zeros(n, d), cfg, rng);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += out(r, c);
    mean /= n;
    for (std::size_t r = 0; r < n; ++r) sq += (out(r, c) - mean) * (out(r, c) - mean);
    const double sd = std::sqrt(sq / (n - 1));
    CAPTURE(c);
    CHECK(std::abs(sd / sigma - 1.0) < 0.03);
    CHECK(std::abs(mean) < 4.0 * sigma / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("per-count sensitivity scales the noise") {
  dp::DpConfig cfg = enabled();
  cfg.per_count_sensitivity = true;
  std::mt19937_64 rng(4);
  const std::size_t n = 10000;
  std::vector<double> counts(n, 10.0);
  const Tensor out = dp::clip_and_perturb(Tensor::zeros(n, 1), cfg, rng, counts);
  double sq = 0.0;
  for (double v : out.values()) sq += v * v;
  const double expected = dp::gaussian_sigma(1.0, 1e-5, 2.0 / 10.0);
  CHECK(std::abs(std::sqrt(sq / n) / expected - 1.0) < 0.03);
  CHECK_THROWS_AS(dp::clip_and_perturb(Tensor::zeros(2, 1), cfg, rng), ConfigError);
}

TEST_CASE("rows are clipped before noise") {
  // Noise is symmetric around the clipped row, so the mean recovers it.
  const dp::DpConfig cfg = enabled();
  std::mt19937_64 rng(5);
  const std::size_t n = 20000;
  Tensor rows = Tensor::zeros(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    rows(r, 0) = 6.0;
    rows(r, 1) = 8.0;
  }
  const Tensor out = dp::clip_and_perturb(rows, cfg, rng);
  double m0 = 0.0;
  for (std::size_t r = 0; r < n; ++r) m0 += out(r, 0);
  m0 /= n;
  const double se = dp::gaussian_sigma(1.0, 1e-5, 2.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(m0 - 0.6) < 4.0 * se);
}
