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
#include <filesystem>
#include <string>
#include <vector>

#include "fedmig/exp/config.hpp"
#include "fedmig/exp/metrics.hpp"
#include "fedmig/federation/protocol.hpp"
#include "json.hpp"

namespace fedmig::exp {

// Sets the global log level from FEDMIG_LOG (trace..off, default warn).
void init_logging();

struct ExperimentResult {
  std::vector<fed::RoundReport> reports;
  std::size_t num_clusters = 0;
};

/// Builds the dataset, runs the configured arm and writes into
/// cfg.output.dir: rounds.csv (one row per round, flushed as it goes),
/// summary.json, predictions.csv, config.json, and optionally
/// embeddings.csv and checkpoints/.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Same, on an already built dataset.
ExperimentResult run_experiment(const ExperimentConfig& cfg, graph::FederationDataset data);

std::string rounds_csv_header();
std::string rounds_csv_row(const fed::RoundReport& report);

nlohmann::json metrics_json(const MetricsBundle& m);

/// Run summary without arm name or byte counts, so that arms computing the
/// same models summarize identically.
nlohmann::json summary_json(const std::vector<fed::RoundReport>& reports,
                            std::size_t num_clusters, const graph::FederationDataset& data,
                            std::uint64_t seed);

/// Recomputes metrics from a run directory's predictions.csv and
/// summary.json.
MetricsBundle evaluate_run_dir(const std::filesystem::path& dir);

/// Reads embeddings.csv into features and labels.
void read_embeddings(const std::filesystem::path& path, num::Tensor& features,
                     std::vector<std::size_t>& labels);

}  // namespace fedmig::exp
