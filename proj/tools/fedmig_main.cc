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

// Command-line entry point: generate, simulate, evaluate, project.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fedmig/error.hpp"
#include "fedmig/exp/config.hpp"
#include "fedmig/exp/experiment.hpp"
#include "fedmig/exp/projection.hpp"
#include "fedmig/graph/csv.hpp"

namespace {

using fedmig::exp::ExperimentConfig;

struct Overrides {
  std::string config;
  std::optional<std::string> arm;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
  std::optional<std::string> out;
  std::optional<std::string> ablate;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::optional<double> threshold;
  std::optional<std::size_t> clusters;
  std::optional<std::string> data;
  std::optional<std::string> sbm;
  bool embeddings = false;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : fedmig::exp::load_config(o.config);
  auto& p = cfg.protocol;
  if (o.arm) p.arm = fedmig::fed::parse_arm(*o.arm);
  if (o.seed) p.seed = *o.seed;
  if (o.rounds) p.rounds = *o.rounds;
  if (o.out) cfg.output.dir = *o.out;
  if (o.ablate) p.ablation = fedmig::exp::parse_ablation_list(*o.ablate);
  if (o.lambda1) p.lambda1 = *o.lambda1;
  if (o.lambda2) p.lambda2 = *o.lambda2;
  if (o.threshold) p.threshold = *o.threshold;
  if (o.clusters) p.clusters = *o.clusters;
  if (o.data) {
    cfg.data.source = fedmig::exp::DataSource::kDir;
    cfg.data.dir = *o.data;
  }
  if (o.sbm) {
    cfg.data.source = fedmig::exp::DataSource::kSbm;
    fedmig::exp::apply_sbm_overrides(cfg.data.sbm, *o.sbm);
  }
  if (o.embeddings) cfg.output.embeddings = true;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "TOML or JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Experiment seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--sbm", o.sbm, "SBM overrides, e.g. num_clients=4,min_nodes=100");
}

int run_generate(const Overrides& o) {
  if (!o.out) throw fedmig::ConfigError("generate: --out is required");
  ExperimentConfig cfg = resolve(o);
  const auto data = fedmig::exp::build_dataset(cfg.data, cfg.seed());
  fedmig::graph::save_dataset_dir(data, fedmig::exp::resolved_split(cfg.data, cfg.seed()),
                                  *o.out);
  fmt::print("wrote {} clients to {}\n", data.clients.size(), *o.out);
  return 0;
}

int run_simulate(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const auto result = fedmig::exp::run_experiment(cfg);
  const auto& m = result.reports.back().metrics;
  fmt::print("{}: {} rounds, {} clusters, accuracy {:.4f}, minority recall {:.4f} -> {}\n",
             fedmig::fed::arm_name(cfg.protocol.arm), result.reports.size(), result.num_clusters,
             m.overall_accuracy, m.minority_recall, cfg.output.dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  fedmig::exp::init_logging();
  CLI::App app{"Simulator for mutual-information-guided federated graph learning"};
  app.require_subcommand(1);

  Overrides gen_opts;
  auto* gen = app.add_subcommand("generate", "Write a synthetic SBM federation to a directory");
  add_common(gen, gen_opts);

  Overrides sim_opts;
  auto* sim = app.add_subcommand("simulate", "Run one arm and write reports");
  add_common(sim, sim_opts);
  sim->add_option("--arm", sim_opts.arm, "graphfedmig, local, fedavg or flhc");
  sim->add_option("--rounds", sim_opts.rounds, "Communication rounds");
  sim->add_option("--ablate", sim_opts.ablate, "Comma list of gan, mi_loss, migma to disable");
  sim->add_option("--lambda1", sim_opts.lambda1, "Weight of the adversarial term");
  sim->add_option("--lambda2", sim_opts.lambda2, "Weight of the contrastive term");
  sim->add_option("--threshold", sim_opts.threshold, "Clustering similarity threshold");
  sim->add_option("--clusters", sim_opts.clusters, "Fixed number of clusters (0: threshold)");
  sim->add_option("--data", sim_opts.data, "Dataset directory written by generate");
  sim->add_flag("--embeddings", sim_opts.embeddings, "Also write embeddings.csv");

  std::string eval_dir;
  auto* eval = app.add_subcommand("evaluate", "Recompute metrics of a finished run");
  eval->add_option("--run", eval_dir, "Run directory")->required();

  std::string proj_in, proj_out;
  auto* proj = app.add_subcommand("project", "2-D PCA of an embeddings.csv");
  proj->add_option("--input", proj_in, "embeddings.csv")->required()->check(CLI::ExistingFile);
  proj->add_option("--out", proj_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return run_generate(gen_opts);
    if (*sim) return run_simulate(sim_opts);
    if (*eval) {
      std::cout << fedmig::exp::metrics_json(fedmig::exp::evaluate_run_dir(eval_dir)).dump(2)
                << '\n';
      return 0;
    }
    if (*proj) {
      fedmig::num::Tensor features;
      std::vector<std::size_t> labels;
      fedmig::exp::read_embeddings(proj_in, features, labels);
      fedmig::exp::emit_projection_data(features, labels, proj_out);
      return 0;
    }
  } catch (const fedmig::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const fedmig::ParseError& e) {
    spdlog::error("parse error: {}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
