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

#include "fedmig/graph/local_graph.hpp"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "fedmig/error.hpp"
#include "fedmig/rng.hpp"

namespace fedmig::graph {

void SplitSpec::validate() const {
  if (train < 0.0 || val < 0.0 || train + val > 1.0) {
    throw ConfigError(fmt::format(
        "split fractions train={} val={} must be nonnegative and sum to <= 1",
        train, val));
  }
}

Split split_of(NodeId id, const SplitSpec& spec) {
  const double u = unit_interval(
      derive_seed(spec.seed, {stream::kSplit, static_cast<std::uint64_t>(id)}));
  if (u < spec.train) return Split::kTrain;
  if (u < spec.train + spec.val) return Split::kVal;
  return Split::kTest;
}

void LocalGraph::apply_split(const SplitSpec& spec) {
  spec.validate();
  train_mask.assign(num_nodes, false);
  val_mask.assign(num_nodes, false);
  test_mask.assign(num_nodes, false);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    switch (split_of(node_ids[i], spec)) {
      case Split::kTrain: train_mask[i] = true; break;
      case Split::kVal: val_mask[i] = true; break;
      case Split::kTest: test_mask[i] = true; break;
    }
  }
}

void LocalGraph::validate(std::size_t num_classes) const {
  num::validate_csr(adjacency);
  if (adjacency.num_rows() != num_nodes) {
    throw StructuralError("adjacency row count differs from num_nodes");
  }
  if (features.rows() != num_nodes || labels.size() != num_nodes ||
      node_ids.size() != num_nodes || train_mask.size() != num_nodes ||
      val_mask.size() != num_nodes || test_mask.size() != num_nodes) {
    throw StructuralError("per-node arrays disagree with num_nodes");
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (labels[i] >= num_classes) {
      throw StructuralError(fmt::format("node {} has label {} but H = {}",
                                        node_ids[i], labels[i], num_classes));
    }
    const int in = int(train_mask[i]) + int(val_mask[i]) + int(test_mask[i]);
    if (in > 1) {
      throw StructuralError(fmt::format("node {} is in more than one split", node_ids[i]));
    }
    for (std::size_t j : adjacency.neighbors(i)) {
      if (j == i) throw StructuralError(fmt::format("self-loop on node {}", node_ids[i]));
      const auto back = adjacency.neighbors(j);
      if (std::find(back.begin(), back.end(), i) == back.end()) {
        throw StructuralError(fmt::format("edge ({}, {}) has no reverse",
                                          node_ids[i], node_ids[j]));
      }
    }
  }
}

void FederationDataset::validate() const {
  if (clients.empty()) throw ConfigError("federation has no clients");
  const std::size_t d = clients.front().feature_dim();
  for (const auto& c : clients) {
    if (c.feature_dim() != d) throw StructuralError("clients disagree on feature width");
    c.validate(num_classes);
  }
  if (minority_classes.empty() || minority_classes.size() >= num_classes) {
    throw ConfigError("minority classes must be a nonempty strict subset of [0, H)");
  }
  for (std::size_t m : minority_classes) {
    if (m >= num_classes) throw ConfigError(fmt::format("minority class {} >= H", m));
  }
}

num::Csr build_symmetric_csr(std::size_t num_nodes,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> adj(num_nodes);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw StructuralError(fmt::format("edge ({}, {}) outside {} nodes", u, v, num_nodes));
    }
    if (u == v) continue;
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  num::Csr csr;
  csr.offsets.reserve(num_nodes + 1);
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    csr.indices.insert(csr.indices.end(), nbrs.begin(), nbrs.end());
    csr.offsets.push_back(csr.indices.size());
  }
  return csr;
}

LocalGraph induced_subgraph(const LocalGraph& g, const std::vector<std::size_t>& nodes) {
  std::unordered_map<std::size_t, std::size_t> local;
  local.reserve(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!local.emplace(nodes[i], i).second) {
      throw StructuralError("induced_subgraph: node listed twice");
    }
  }
  LocalGraph out;
  out.num_nodes = nodes.size();
  const std::size_t d = g.feature_dim();
  out.features = num::Tensor::zeros(nodes.size(), d);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::size_t u = nodes[i];
    std::copy_n(g.features.row_span(u).begin(), d, out.features.row_span(i).begin());
    out.labels.push_back(g.labels[u]);
    out.train_mask.push_back(g.train_mask[u]);
    out.val_mask.push_back(g.val_mask[u]);
    out.test_mask.push_back(g.test_mask[u]);
    out.node_ids.push_back(g.node_ids[u]);
    for (std::size_t v : g.adjacency.neighbors(u)) {
      auto it = local.find(v);
      if (it != local.end() && i < it->second) edges.emplace_back(i, it->second);
    }
  }
  out.adjacency = build_symmetric_csr(out.num_nodes, edges);
  return out;
}

std::vector<std::size_t> class_histogram(const std::vector<std::size_t>& labels,
                                         std::size_t num_classes) {
  std::vector<std::size_t> hist(num_classes, 0);
  for (std::size_t y : labels) {
    if (y < num_classes) ++hist[y];
  }
  return hist;
}

std::vector<std::size_t> auto_minority_classes(const FederationDataset& data) {
  std::vector<std::size_t> total(data.num_classes, 0);
  std::size_t n = 0;
  for (const auto& c : data.clients) {
    const auto h = class_histogram(c.labels, data.num_classes);
    for (std::size_t k = 0; k < data.num_classes; ++k) total[k] += h[k];
    n += c.num_nodes;
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < data.num_classes; ++k) {
    if (n > 0 && static_cast<double>(total[k]) / static_cast<double>(n) <
                     1.0 / static_cast<double>(data.num_classes)) {
      out.push_back(k);
    }
  }
  return out;
}

}  // namespace fedmig::graph
