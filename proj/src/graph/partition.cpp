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

#include "fedmig/graph/partition.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "fedmig/error.hpp"
#include "fedmig/rng.hpp"

namespace fedmig::graph {

FederationDataset partition_clients(const LocalGraph& global, std::size_t num_clients,
                                    std::size_t num_classes, SizeRange sizes,
                                    std::uint64_t seed) {
  const std::size_t N = global.num_nodes;
  if (num_clients == 0 || sizes.min == 0 || sizes.min > sizes.max) {
    throw ConfigError(fmt::format("partition: bad client count {} or size range [{}, {}]",
                                  num_clients, sizes.min, sizes.max));
  }
  if (num_clients * sizes.min > N) {
    throw ConfigError(fmt::format("partition: {} clients x {} nodes exceeds {} nodes",
                                  num_clients, sizes.min, N));
  }
  std::mt19937_64 rng(derive_seed(seed, {stream::kPartition}));

  std::uniform_int_distribution<std::size_t> size_dist(sizes.min, std::min(sizes.max, N));
  std::vector<std::size_t> target(num_clients);
  std::size_t total = 0;
  for (auto& s : target) total += (s = size_dist(rng));
  while (total > N) {
    const std::size_t excess = total - N;
    const std::size_t step = (excess + num_clients - 1) / num_clients;
    for (auto& s : target) {
      const std::size_t cut = std::min({s - sizes.min, step, total - N});
      s -= cut;
      total -= cut;
    }
  }

  std::vector<std::vector<std::size_t>> pools(num_classes);
  for (std::size_t i = 0; i < N; ++i) pools.at(global.labels[i]).push_back(i);
  for (auto& p : pools) std::shuffle(p.begin(), p.end(), rng);
  std::vector<double> frac(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    frac[c] = static_cast<double>(pools[c].size()) / static_cast<double>(N);
  }

  FederationDataset data;
  data.num_classes = num_classes;
  for (std::size_t m = 0; m < num_clients; ++m) {
    const std::size_t s = target[m];
    std::vector<std::size_t> quota(num_classes);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double exact = frac[c] * static_cast<double>(s);
      quota[c] = std::min(static_cast<std::size_t>(std::floor(exact)), pools[c].size());
      assigned += quota[c];
      rem.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [r, c] : rem) {
      if (assigned == s) break;
      if (quota[c] < pools[c].size()) {
        ++quota[c];
        ++assigned;
      }
    }
    // Shortfall: fill from whichever classes still have nodes, in class order.
    for (std::size_t c = 0; assigned < s && c < num_classes; ++c) {
      const std::size_t extra = std::min(pools[c].size() - quota[c], s - assigned);
      quota[c] += extra;
      assigned += extra;
    }

    std::vector<std::size_t> nodes;
    for (std::size_t c = 0; c < num_classes; ++c) {
      nodes.insert(nodes.end(), pools[c].end() - static_cast<std::ptrdiff_t>(quota[c]),
                   pools[c].end());
      pools[c].resize(pools[c].size() - quota[c]);
    }
    std::sort(nodes.begin(), nodes.end());
    data.clients.push_back(induced_subgraph(global, nodes));
  }
  data.minority_classes = auto_minority_classes(data);
  return data;
}

}  // namespace fedmig::graph
