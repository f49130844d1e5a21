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

#include "fedmig/exp/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>
#include <spdlog/spdlog.h>

#include "fedmig/error.hpp"
#include "fedmig/models/checkpoint.hpp"

namespace fedmig::exp {

using nlohmann::json;

void init_logging() {
  const char* env = std::getenv("FEDMIG_LOG");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (env != nullptr && *env != '\0') {
    level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string_view(env) != "off") {
      level = spdlog::level::warn;
      spdlog::warn("FEDMIG_LOG='{}' not recognized; using warn", env);
    }
  }
  spdlog::set_level(level);
}

std::string rounds_csv_header() {
  return "round,arm,overall_acc,minority_acc,overall_recall,minority_recall,mean_ce,mean_gan,"
         "mean_mi,bytes_up,bytes_down";
}

std::string rounds_csv_row(const fed::RoundReport& r) {
  const MetricsBundle& m = r.metrics;
  return fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{},{}",
                     r.round, fed::arm_name(r.arm), m.overall_accuracy, m.minority_accuracy,
                     m.overall_recall, m.minority_recall, r.mean_ce(), r.mean_gan(), r.mean_mi(),
                     r.total_up(), r.total_down());
}

json metrics_json(const MetricsBundle& m) {
  json per_class = json::array();
  for (const auto& r : m.per_class_recall) per_class.push_back(r ? json(*r) : json(nullptr));
  return {{"overall_accuracy", m.overall_accuracy},
          {"minority_accuracy", m.minority_accuracy},
          {"overall_recall", m.overall_recall},
          {"minority_recall", m.minority_recall},
          {"per_class_recall", per_class}};
}

json summary_json(const std::vector<fed::RoundReport>& reports, std::size_t num_clusters,
                  const graph::FederationDataset& data, std::uint64_t seed) {
  json history = json::array();
  for (const auto& r : reports) {
    history.push_back({{"round", r.round},
                       {"overall_acc", r.metrics.overall_accuracy},
                       {"minority_acc", r.metrics.minority_accuracy},
                       {"overall_recall", r.metrics.overall_recall},
                       {"minority_recall", r.metrics.minority_recall},
                       {"mean_ce", r.mean_ce()},
                       {"mean_gan", r.mean_gan()},
                       {"mean_mi", r.mean_mi()}});
  }
  return {{"format", "fedmig.summary"},
          {"version", 1},
          {"seed", seed},
          {"rounds", reports.size()},
          {"num_clients", data.clients.size()},
          {"num_classes", data.num_classes},
          {"minority_classes", data.minority_classes},
          {"num_clusters", num_clusters},
          {"final", reports.empty() ? json(nullptr) : metrics_json(reports.back().metrics)},
          {"history", history}};
}

namespace {

void write_checkpoints(const fed::Federation& fed, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& c : fed.clients()) {
    model::write_text_file(dir / fmt::format("client_{:03}.generator.json", c.client_id),
                           model::to_checkpoint(c.generator));
  }
  model::write_text_file(dir / "discriminator.json",
                         model::to_checkpoint(fed.global_discriminator()));
  for (const auto& k : fed.clusters()) {
    if (k.virtual_generator) {
      model::write_text_file(dir / fmt::format("cluster_{:03}.generator.json", k.cluster_id),
                             model::to_checkpoint(*k.virtual_generator));
    }
  }
}

void write_predictions(const fed::Federation& fed, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  out.print("client,node_id,label,prediction,test\n");
  for (std::size_t m = 0; m < fed.clients().size(); ++m) {
    const auto preds = fed.predictions(m);
    const graph::LocalGraph& g = fed.clients()[m].graph;
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      out.print("{},{},{},{},{}\n", m, g.node_ids[i], g.labels[i], preds[i],
                g.test_mask[i] ? 1 : 0);
    }
  }
}

void write_embeddings(const fed::Federation& fed, const std::filesystem::path& path) {
  auto out = fmt::output_file(path.string());
  const std::size_t d = fed.clients().empty() ? 0 : fed.embeddings(0).cols();
  out.print("client,node_id,label");
  for (std::size_t j = 0; j < d; ++j) out.print(",z{}", j);
  out.print("\n");
  for (std::size_t m = 0; m < fed.clients().size(); ++m) {
    const num::Tensor z = fed.embeddings(m);
    const graph::LocalGraph& g = fed.clients()[m].graph;
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      out.print("{},{},{}", m, g.node_ids[i], g.labels[i]);
      for (std::size_t j = 0; j < d; ++j) out.print(",{:.17g}", z(i, j));
      out.print("\n");
    }
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, build_dataset(cfg.data, cfg.seed()));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, graph::FederationDataset data) {
  cfg.validate();
  const std::filesystem::path& dir = cfg.output.dir;
  std::filesystem::create_directories(dir);
  model::write_text_file(dir / "config.json", config_to_json(cfg).dump(2) + "\n");

  fed::Federation fed(std::move(data), cfg.protocol);
  ExperimentResult result;
  result.num_clusters = fed.assignment().num_clusters;

  std::ofstream csv(dir / "rounds.csv");
  if (!csv) throw ConfigError(fmt::format("cannot write {}", (dir / "rounds.csv").string()));
  csv << rounds_csv_header() << '\n' << std::flush;
  while (fed.rounds_completed() < cfg.protocol.rounds) {
    result.reports.push_back(fed.run_round());
    const auto& r = result.reports.back();
    csv << rounds_csv_row(r) << '\n' << std::flush;
    spdlog::info("round {}/{}: acc {:.4f} minority recall {:.4f}", r.round + 1,
                 cfg.protocol.rounds, r.metrics.overall_accuracy, r.metrics.minority_recall);
    if (cfg.output.checkpoint_every > 0 && (r.round + 1) % cfg.output.checkpoint_every == 0) {
      write_checkpoints(fed, dir / "checkpoints" / fmt::format("round_{:04}", r.round + 1));
    }
  }

  model::write_text_file(
      dir / "summary.json",
      summary_json(result.reports, result.num_clusters, fed.dataset(), cfg.seed()).dump(2) + "\n");
  write_predictions(fed, dir / "predictions.csv");
  if (cfg.output.embeddings) write_embeddings(fed, dir / "embeddings.csv");
  return result;
}

MetricsBundle evaluate_run_dir(const std::filesystem::path& dir) {
  const json summary = json::parse(model::read_text_file(dir / "summary.json"));
  const auto minority = summary.at("minority_classes").get<std::vector<std::size_t>>();
  const auto num_classes = summary.at("num_classes").get<std::size_t>();

  std::ifstream in(dir / "predictions.csv");
  if (!in) throw ConfigError(fmt::format("cannot open {}", (dir / "predictions.csv").string()));
  std::string line;
  std::getline(in, line);
  std::vector<std::size_t> preds, labels;
  std::vector<bool> mask;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) {
      throw ParseError(fmt::format("predictions.csv:{}: expected 5 fields", line_no));
    }
    try {
      labels.push_back(std::stoul(f[2]));
      preds.push_back(std::stoul(f[3]));
      mask.push_back(f[4] == "1");
    } catch (const std::exception&) {
      throw ParseError(fmt::format("predictions.csv:{}: malformed number", line_no));
    }
  }
  return evaluate(preds, labels, mask, minority, num_classes);
}

void read_embeddings(const std::filesystem::path& path, num::Tensor& features,
                     std::vector<std::size_t>& labels) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(fmt::format("{}: empty file", path.string()));
  const std::size_t d = split_csv_line(line).size() - 3;
  std::vector<double> values;
  labels.clear();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != d + 3) {
      throw ParseError(fmt::format("{}:{}: expected {} fields", path.string(), line_no, d + 3));
    }
    try {
      labels.push_back(std::stoul(f[2]));
      for (std::size_t j = 0; j < d; ++j) values.push_back(std::stod(f[3 + j]));
    } catch (const std::exception&) {
      throw ParseError(fmt::format("{}:{}: malformed number", path.string(), line_no));
    }
  }
  features = num::Tensor::matrix(labels.size(), d, std::move(values));
}

}  // namespace fedmig::exp
