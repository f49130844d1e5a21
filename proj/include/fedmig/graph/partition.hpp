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

#include "fedmig/graph/local_graph.hpp"

namespace fedmig::graph {

struct SizeRange {
  std::size_t min = 400;
  std::size_t max = 1200;
};

/// Splits one global graph into `num_clients` disjoint induced subgraphs.
///
/// Client sizes are drawn uniformly from `sizes` and trimmed until they fit
/// the graph. Nodes are drawn per class (stratified), so every client keeps
/// the global class proportions up to rounding. Cross-client edges are
/// dropped. Throws ConfigError when num_clients * sizes.min > num_nodes.
FederationDataset partition_clients(const LocalGraph& global, std::size_t num_clients,
                                    std::size_t num_classes, SizeRange sizes,
                                    std::uint64_t seed);

}  // namespace fedmig::graph
