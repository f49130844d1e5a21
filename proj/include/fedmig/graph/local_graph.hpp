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
#include <cstdint>
#include <utility>
#include <vector>

#include "fedmig/numerics/tensor.hpp"

namespace fedmig::graph {

using NodeId = std::int64_t;

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Split { kTrain, kVal, kTest };

// Deterministic split bucket of a node id: seeded hash mapped to [0, 1).
Split split_of(NodeId id, const SplitSpec& spec);

/// One client's private graph.
struct LocalGraph {
  std::size_t num_nodes = 0;
  num::Csr adjacency;
  num::Tensor features;  // num_nodes x d_V
  std::vector<std::size_t> labels;
  std::vector<bool> train_mask;
  std::vector<bool> val_mask;
  std::vector<bool> test_mask;
  // Original (dataset-wide) identifier of each local node.
  std::vector<NodeId> node_ids;

  std::size_t feature_dim() const { return features.cols(); }
  std::size_t num_edges() const { return adjacency.indices.size() / 2; }

  void apply_split(const SplitSpec& spec);

  // Checks every LocalGraph invariant; throws StructuralError.
  void validate(std::size_t num_classes) const;

  friend bool operator==(const LocalGraph&, const LocalGraph&) = default;
};

struct FederationDataset {
  std::vector<LocalGraph> clients;
  std::size_t num_classes = 0;
  std::vector<std::size_t> minority_classes;

  std::size_t feature_dim() const {
    return clients.empty() ? 0 : clients.front().feature_dim();
  }
  void validate() const;

  friend bool operator==(const FederationDataset&, const FederationDataset&) = default;
};

/// Symmetric, self-loop-free CSR from an undirected edge list over
/// [0, num_nodes). Duplicate edges collapse; neighbor lists are sorted.
num::Csr build_symmetric_csr(std::size_t num_nodes,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// Subgraph induced by `nodes` (local order = order given), internal edges only.
LocalGraph induced_subgraph(const LocalGraph& g, const std::vector<std::size_t>& nodes);

// Classes whose frequency over all client nodes is below 1/H.
std::vector<std::size_t> auto_minority_classes(const FederationDataset& data);

std::vector<std::size_t> class_histogram(const std::vector<std::size_t>& labels,
                                         std::size_t num_classes);

}  // namespace fedmig::graph
