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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedmig/federation/protocol.hpp"
#include "fedmig/graph/local_graph.hpp"
#include "fedmig/graph/partition.hpp"
#include "fedmig/graph/sbm.hpp"
#include "json.hpp"

namespace fedmig::exp {

enum class DataSource { kSbm, kCsv, kDir };

struct CsvData {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::size_t num_classes = 0;
  std::size_t num_clients = 8;
  graph::SizeRange sizes;
};

struct DataConfig {
  DataSource source = DataSource::kSbm;
  graph::SbmConfig sbm;
  CsvData csv;
  std::filesystem::path dir;
  graph::SplitSpec split;
  // Unset seeds follow the experiment seed.
  std::optional<std::uint64_t> sbm_seed;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::uint64_t> partition_seed;
  // Unset: classes rarer than 1/H (or the dataset's own list).
  std::optional<std::vector<std::size_t>> minority_classes;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::size_t checkpoint_every = 0;  // rounds; 0 disables checkpoints
  bool embeddings = false;
};

struct ExperimentConfig {
  DataConfig data;
  fed::ProtocolConfig protocol;
  OutputConfig output;

  std::uint64_t seed() const { return protocol.seed; }
  void validate() const;
};

/// Reads a config object. Unknown keys are rejected with ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Parses TOML into the equivalent JSON document.
nlohmann::json toml_to_json(std::string_view toml_text, std::string_view source_name = "config");

/// Loads a `.toml` or `.json` config file.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Disables the listed terms ("gan", "mi_loss", "migma"); "none" or an empty
/// list enables all of them.
fed::Ablation parse_ablation_list(std::string_view list);

/// Applies `key=value` SBM overrides separated by commas.
void apply_sbm_overrides(graph::SbmConfig& sbm, std::string_view overrides);

/// Builds the federation the config describes.
graph::FederationDataset build_dataset(const DataConfig& data, std::uint64_t seed);

// The split and SBM settings with unset seeds resolved.
graph::SplitSpec resolved_split(const DataConfig& data, std::uint64_t seed);
graph::SbmConfig resolved_sbm(const DataConfig& data, std::uint64_t seed);

}  // namespace fedmig::exp
