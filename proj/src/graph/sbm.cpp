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

#include "fedmig/graph/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "fedmig/error.hpp"
#include "fedmig/rng.hpp"

namespace fedmig::graph {

std::vector<double> SbmConfig::class_proportions() const {
  std::vector<double> p(num_classes,
                        (1.0 - minority_fraction) / static_cast<double>(num_classes - 1));
  p.back() = minority_fraction;
  return p;
}

void SbmConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (num_clients == 0) throw ConfigError("sbm: num_clients must be >= 1");
  if (num_classes < 2) throw ConfigError("sbm: need at least 2 classes");
  if (feature_dim == 0) throw ConfigError("sbm: feature_dim must be >= 1");
  if (min_nodes < num_classes || min_nodes > max_nodes) {
    throw ConfigError(fmt::format("sbm: bad node range [{}, {}]", min_nodes, max_nodes));
  }
  if (!(minority_fraction > 0.0) ||
      !(minority_fraction < 1.0 / static_cast<double>(num_classes))) {
    throw ConfigError(fmt::format("sbm: minority fraction {} must lie in (0, 1/H)",
                                  minority_fraction));
  }
  if (!prob(p_intra) || !prob(p_inter)) {
    throw ConfigError(fmt::format("sbm: edge probabilities ({}, {}) outside [0, 1]",
                                  p_intra, p_inter));
  }
  if (!(p_intra > p_inter)) {
    throw ConfigError("sbm: intra-block probability must exceed inter-block probability");
  }
  if (mean_separation < 0.0 || noise < 0.0) {
    throw ConfigError("sbm: separation and noise must be nonnegative");
  }
  if (num_domains == 0 || !prob(domain_shift)) {
    throw ConfigError("sbm: need >= 1 domain and domain_shift in [0, 1]");
  }
  split.validate();
}

namespace {

// Node count per class by largest remainder; ties go to the lower class id.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& props) {
  std::vector<std::size_t> counts(props.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t c = 0; c < props.size(); ++c) {
    const double exact = props[c] * static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    used += counts[c];
    rem.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[rem[k % rem.size()].second];
  return counts;
}

}  // namespace

FederationDataset generate_sbm(const SbmConfig& cfg) {
  cfg.validate();
  const std::size_t H = cfg.num_classes, d = cfg.feature_dim;

  // means[domain][class] = separation * ((1 - s) * shared + s * domain-specific)
  std::mt19937_64 mean_rng(derive_seed(cfg.seed, {stream::kSbmMeans}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  auto draw_direction = [&] {
    std::vector<double> v(d);
    for (double& x : v) x = gauss(mean_rng) * unit;
    return v;
  };
  std::vector<std::vector<double>> shared(H);
  for (auto& v : shared) v = draw_direction();
  std::vector<std::vector<std::vector<double>>> means(cfg.num_domains,
                                                      std::vector<std::vector<double>>(H));
  for (std::size_t dom = 0; dom < cfg.num_domains; ++dom) {
    for (std::size_t c = 0; c < H; ++c) {
      const auto own = draw_direction();
      means[dom][c].resize(d);
      for (std::size_t k = 0; k < d; ++k) {
        means[dom][c][k] = cfg.mean_separation *
                           ((1.0 - cfg.domain_shift) * shared[c][k] + cfg.domain_shift * own[k]);
      }
    }
  }

  FederationDataset data;
  data.num_classes = H;
  data.minority_classes = {H - 1};
  const auto props = cfg.class_proportions();
  NodeId next_id = 0;
  for (std::size_t m = 0; m < cfg.num_clients; ++m) {
    std::mt19937_64 rng(derive_seed(cfg.seed, {stream::kSbmGraph, m}));
    std::uniform_int_distribution<std::size_t> size_dist(cfg.min_nodes, cfg.max_nodes);
    const std::size_t n = size_dist(rng);

    LocalGraph g;
    g.num_nodes = n;
    const auto counts = apportion(n, props);
    for (std::size_t c = 0; c < H; ++c) g.labels.insert(g.labels.end(), counts[c], c);
    std::shuffle(g.labels.begin(), g.labels.end(), rng);

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double p = g.labels[i] == g.labels[j] ? cfg.p_intra : cfg.p_inter;
        if (coin(rng) < p) edges.emplace_back(i, j);
      }
    }
    g.adjacency = build_symmetric_csr(n, edges);

    const auto& mu = means[m % cfg.num_domains];
    g.features = num::Tensor::zeros(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        g.features(i, k) = mu[g.labels[i]][k] + cfg.noise * gauss(rng);
      }
    }
    for (std::size_t i = 0; i < n; ++i) g.node_ids.push_back(next_id++);
    g.apply_split(cfg.split);
    data.clients.push_back(std::move(g));
  }
  data.validate();
  return data;
}

}  // namespace fedmig::graph
