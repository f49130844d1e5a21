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

#include <filesystem>

#include "fedmig/graph/local_graph.hpp"

namespace fedmig::graph {

/// Loads a graph from three CSV files:
///   edges:    `src,dst` per line (undirected; header optional)
///   features: `node_id,f0,...,f{d-1}`
///   labels:   `node_id,label`
/// Local node order is ascending node id. Malformed rows raise ParseError
/// naming file and line; unknown or duplicate ids raise StructuralError.
LocalGraph load_csv_graph(const std::filesystem::path& edges_path,
                          const std::filesystem::path& features_path,
                          const std::filesystem::path& labels_path,
                          const SplitSpec& split, std::size_t num_classes);

void write_csv_graph(const LocalGraph& g, const std::filesystem::path& edges_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path);

// A dataset directory: manifest.json plus client_XXX/{edges,features,labels}.csv.
void save_dataset_dir(const FederationDataset& data, const SplitSpec& split,
                      const std::filesystem::path& dir);
FederationDataset load_dataset_dir(const std::filesystem::path& dir);

}  // namespace fedmig::graph
