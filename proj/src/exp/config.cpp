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

#include "fedmig/exp/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>

#include "fedmig/error.hpp"
#include "fedmig/graph/csv.hpp"
#include "toml.hpp"

namespace fedmig::exp {

using nlohmann::json;

namespace {

void check_keys(const json& obj, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected a table", where));
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, item.key()));
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("expected a boolean");
      out = it->get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer() || (std::is_unsigned_v<T> && it->get<std::int64_t>() < 0)) {
        throw ConfigError("expected a nonnegative integer");
      }
      out = it->get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError("expected a number");
      out = it->get<T>();
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      if (!it->is_string()) throw ConfigError("expected a string");
      out = it->get<std::string>();
    } else {
      if (!it->is_string()) throw ConfigError("expected a string");
      out = it->get<T>();
    }
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}.{}: {}", where, key, e.what()));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}.{}: {}", where, key, e.what()));
  }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out,
                   std::string_view where) {
  if (!obj.contains(key)) return;
  T value{};
  read(obj, key, value, where);
  out = value;
}

const json& table(const json& obj, const char* key) {
  static const json empty = json::object();
  auto it = obj.find(key);
  return it == obj.end() ? empty : *it;
}

DataSource parse_source(std::string_view s) {
  if (s == "sbm") return DataSource::kSbm;
  if (s == "csv") return DataSource::kCsv;
  if (s == "dir") return DataSource::kDir;
  throw ConfigError(fmt::format("data.source: unknown source '{}' (sbm, csv, dir)", s));
}

std::string_view source_name(DataSource s) {
  switch (s) {
    case DataSource::kSbm: return "sbm";
    case DataSource::kCsv: return "csv";
    case DataSource::kDir: return "dir";
  }
  return "sbm";
}

std::string_view aggregation_name(fed::GeneratorAggregation a) {
  return a == fed::GeneratorAggregation::kCorrectionOnly ? "correction_only" : "weighted";
}

void read_sbm(const json& t, graph::SbmConfig& sbm, std::optional<std::uint64_t>& seed) {
  check_keys(t, "data.sbm",
             {"num_clients", "min_nodes", "max_nodes", "num_classes", "feature_dim",
              "minority_fraction", "p_intra", "p_inter", "mean_separation", "noise",
              "num_domains", "domain_shift", "seed"});
  const char* w = "data.sbm";
  read(t, "num_clients", sbm.num_clients, w);
  read(t, "min_nodes", sbm.min_nodes, w);
  read(t, "max_nodes", sbm.max_nodes, w);
  read(t, "num_classes", sbm.num_classes, w);
  read(t, "feature_dim", sbm.feature_dim, w);
  read(t, "minority_fraction", sbm.minority_fraction, w);
  read(t, "p_intra", sbm.p_intra, w);
  read(t, "p_inter", sbm.p_inter, w);
  read(t, "mean_separation", sbm.mean_separation, w);
  read(t, "noise", sbm.noise, w);
  read(t, "num_domains", sbm.num_domains, w);
  read(t, "domain_shift", sbm.domain_shift, w);
  read_optional(t, "seed", seed, w);
}

}  // namespace

void ExperimentConfig::validate() const {
  protocol.validate();
  data.split.validate();
  if (data.source == DataSource::kSbm) data.sbm.validate();
  if (data.source == DataSource::kCsv) {
    if (data.csv.edges.empty() || data.csv.features.empty() || data.csv.labels.empty()) {
      throw ConfigError("data.csv: edges, features and labels paths are required");
    }
    if (data.csv.num_classes < 2) throw ConfigError("data.csv.num_classes must be >= 2");
    if (data.csv.num_clients == 0) throw ConfigError("data.csv.num_clients must be >= 1");
  }
  if (data.source == DataSource::kDir && data.dir.empty()) {
    throw ConfigError("data.dir is required for source 'dir'");
  }
  if (output.dir.empty()) throw ConfigError("output.dir must not be empty");
}

ExperimentConfig config_from_json(const json& doc) {
  check_keys(doc, "config",
             {"seed", "arm", "rounds", "data", "protocol", "ablation", "dp", "output"});
  ExperimentConfig cfg;
  fed::ProtocolConfig& p = cfg.protocol;
  read(doc, "seed", p.seed, "config");
  std::string arm(fed::arm_name(p.arm));
  read(doc, "arm", arm, "config");
  p.arm = fed::parse_arm(arm);
  read(doc, "rounds", p.rounds, "config");

  const json& data = table(doc, "data");
  check_keys(data, "data", {"source", "dir", "minority_classes", "sbm", "csv", "split"});
  std::string source = "sbm";
  read(data, "source", source, "data");
  cfg.data.source = parse_source(source);
  read(data, "dir", cfg.data.dir, "data");
  if (data.contains("minority_classes")) {
    try {
      cfg.data.minority_classes = data.at("minority_classes").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("data.minority_classes: {}", e.what()));
    }
  }
  read_sbm(table(data, "sbm"), cfg.data.sbm, cfg.data.sbm_seed);
  const json& csv = table(data, "csv");
  check_keys(csv, "data.csv",
             {"edges", "features", "labels", "num_classes", "num_clients", "min_nodes",
              "max_nodes", "seed"});
  read(csv, "edges", cfg.data.csv.edges, "data.csv");
  read(csv, "features", cfg.data.csv.features, "data.csv");
  read(csv, "labels", cfg.data.csv.labels, "data.csv");
  read(csv, "num_classes", cfg.data.csv.num_classes, "data.csv");
  read(csv, "num_clients", cfg.data.csv.num_clients, "data.csv");
  read(csv, "min_nodes", cfg.data.csv.sizes.min, "data.csv");
  read(csv, "max_nodes", cfg.data.csv.sizes.max, "data.csv");
  read_optional(csv, "seed", cfg.data.partition_seed, "data.csv");
  const json& split = table(data, "split");
  check_keys(split, "data.split", {"train", "val", "seed"});
  read(split, "train", cfg.data.split.train, "data.split");
  read(split, "val", cfg.data.split.val, "data.split");
  read_optional(split, "seed", cfg.data.split_seed, "data.split");

  const json& pr = table(doc, "protocol");
  check_keys(pr, "protocol",
             {"threshold", "clusters", "lambda1", "lambda2", "gamma", "temperature",
              "local_epochs", "pre_epochs", "d_steps", "learning_rate", "generator_aggregation",
              "discriminator_anchor", "hidden", "latent"});
  const char* w = "protocol";
  read(pr, "threshold", p.threshold, w);
  read(pr, "clusters", p.clusters, w);
  read(pr, "lambda1", p.lambda1, w);
  read(pr, "lambda2", p.lambda2, w);
  read(pr, "gamma", p.gamma, w);
  read(pr, "temperature", p.temperature, w);
  read(pr, "local_epochs", p.local_epochs, w);
  read(pr, "pre_epochs", p.pre_epochs, w);
  read(pr, "d_steps", p.d_steps, w);
  read(pr, "learning_rate", p.learning_rate, w);
  read(pr, "hidden", p.hidden, w);
  read(pr, "latent", p.latent, w);
  read(pr, "discriminator_anchor", p.discriminator_anchor, w);
  std::string agg(aggregation_name(p.generator_aggregation));
  read(pr, "generator_aggregation", agg, w);
  p.generator_aggregation = fed::parse_generator_aggregation(agg);

  const json& ab = table(doc, "ablation");
  check_keys(ab, "ablation", {"gan", "mi_loss", "migma"});
  read(ab, "gan", p.ablation.gan, "ablation");
  read(ab, "mi_loss", p.ablation.mi_loss, "ablation");
  read(ab, "migma", p.ablation.migma, "ablation");

  const json& dp = table(doc, "dp");
  check_keys(dp, "dp", {"enabled", "epsilon", "delta", "clip_norm", "per_count_sensitivity"});
  read(dp, "enabled", p.dp.enabled, "dp");
  read(dp, "epsilon", p.dp.epsilon, "dp");
  read(dp, "delta", p.dp.delta, "dp");
  read(dp, "clip_norm", p.dp.clip_norm, "dp");
  read(dp, "per_count_sensitivity", p.dp.per_count_sensitivity, "dp");

  const json& out = table(doc, "output");
  check_keys(out, "output", {"dir", "checkpoint_every", "embeddings"});
  read(out, "dir", cfg.output.dir, "output");
  read(out, "checkpoint_every", cfg.output.checkpoint_every, "output");
  read(out, "embeddings", cfg.output.embeddings, "output");

  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const fed::ProtocolConfig& p = cfg.protocol;
  const graph::SbmConfig& s = cfg.data.sbm;
  json data = {
      {"source", source_name(cfg.data.source)},
      {"sbm",
       {{"num_clients", s.num_clients}, {"min_nodes", s.min_nodes}, {"max_nodes", s.max_nodes},
        {"num_classes", s.num_classes}, {"feature_dim", s.feature_dim},
        {"minority_fraction", s.minority_fraction}, {"p_intra", s.p_intra},
        {"p_inter", s.p_inter}, {"mean_separation", s.mean_separation}, {"noise", s.noise},
        {"num_domains", s.num_domains}, {"domain_shift", s.domain_shift},
        {"seed", cfg.data.sbm_seed.value_or(p.seed)}}},
      {"split",
       {{"train", cfg.data.split.train}, {"val", cfg.data.split.val},
        {"seed", cfg.data.split_seed.value_or(p.seed)}}},
  };
  if (cfg.data.source == DataSource::kDir) data["dir"] = cfg.data.dir.string();
  if (cfg.data.source == DataSource::kCsv) {
    data["csv"] = {{"edges", cfg.data.csv.edges.string()},
                   {"features", cfg.data.csv.features.string()},
                   {"labels", cfg.data.csv.labels.string()},
                   {"num_classes", cfg.data.csv.num_classes},
                   {"num_clients", cfg.data.csv.num_clients},
                   {"min_nodes", cfg.data.csv.sizes.min},
                   {"max_nodes", cfg.data.csv.sizes.max},
                   {"seed", cfg.data.partition_seed.value_or(p.seed)}};
  }
  if (cfg.data.minority_classes) data["minority_classes"] = *cfg.data.minority_classes;
  return {
      {"seed", p.seed},
      {"arm", fed::arm_name(p.arm)},
      {"rounds", p.rounds},
      {"data", data},
      {"protocol",
       {{"threshold", p.threshold}, {"clusters", p.clusters}, {"lambda1", p.lambda1},
        {"lambda2", p.lambda2}, {"gamma", p.gamma}, {"temperature", p.temperature},
        {"local_epochs", p.local_epochs}, {"pre_epochs", p.pre_epochs},
        {"d_steps", p.d_steps}, {"learning_rate", p.learning_rate},
        {"generator_aggregation", aggregation_name(p.generator_aggregation)},
        {"discriminator_anchor", p.discriminator_anchor}, {"hidden", p.hidden},
        {"latent", p.latent}}},
      {"ablation",
       {{"gan", p.ablation.gan}, {"mi_loss", p.ablation.mi_loss}, {"migma", p.ablation.migma}}},
      {"dp",
       {{"enabled", p.dp.enabled}, {"epsilon", p.dp.epsilon}, {"delta", p.dp.delta},
        {"clip_norm", p.dp.clip_norm}, {"per_count_sensitivity", p.dp.per_count_sensitivity}}},
      {"output",
       {{"dir", cfg.output.dir.string()}, {"checkpoint_every", cfg.output.checkpoint_every},
        {"embeddings", cfg.output.embeddings}}},
  };
}

json toml_to_json(std::string_view toml_text, std::string_view source_name) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw ParseError(fmt::format("{}:{}:{}: {}", source_name, where.line, where.column,
                                 e.description()));
  }
  std::ostringstream out;
  out << toml::json_formatter{tbl};
  return json::parse(out.str());
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".json") {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return config_from_json(doc);
  }
  return config_from_json(toml_to_json(text, path.string()));
}

fed::Ablation parse_ablation_list(std::string_view list) {
  fed::Ablation a;
  while (!list.empty()) {
    const auto comma = list.find(',');
    std::string_view item = list.substr(0, comma);
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty() || item == "none") continue;
    if (item == "gan") {
      a.gan = false;
    } else if (item == "mi_loss") {
      a.mi_loss = false;
    } else if (item == "migma") {
      a.migma = false;
    } else {
      throw ConfigError(fmt::format("unknown ablation '{}' (gan, mi_loss, migma)", item));
    }
  }
  return a;
}

void apply_sbm_overrides(graph::SbmConfig& sbm, std::string_view overrides) {
  json t = json::object();
  while (!overrides.empty()) {
    const auto comma = overrides.find(',');
    const std::string_view item = overrides.substr(0, comma);
    overrides = comma == std::string_view::npos ? std::string_view{} : overrides.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("--sbm: expected key=value, got '{}'", item));
    }
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    try {
      t[key] = json::parse(value);
    } catch (const json::parse_error&) {
      throw ConfigError(fmt::format("--sbm: '{}' is not a number", value));
    }
  }
  std::optional<std::uint64_t> seed;
  read_sbm(t, sbm, seed);
  if (seed) throw ConfigError("--sbm: use --seed to set the seed");
}

graph::SplitSpec resolved_split(const DataConfig& data, std::uint64_t seed) {
  graph::SplitSpec s = data.split;
  s.seed = data.split_seed.value_or(seed);
  return s;
}

graph::SbmConfig resolved_sbm(const DataConfig& data, std::uint64_t seed) {
  graph::SbmConfig s = data.sbm;
  s.seed = data.sbm_seed.value_or(seed);
  s.split = resolved_split(data, seed);
  return s;
}

graph::FederationDataset build_dataset(const DataConfig& data, std::uint64_t seed) {
  graph::FederationDataset out;
  switch (data.source) {
    case DataSource::kSbm:
      out = graph::generate_sbm(resolved_sbm(data, seed));
      break;
    case DataSource::kCsv: {
      const graph::LocalGraph g =
          graph::load_csv_graph(data.csv.edges, data.csv.features, data.csv.labels,
                                resolved_split(data, seed), data.csv.num_classes);
      out = graph::partition_clients(g, data.csv.num_clients, data.csv.num_classes,
                                     data.csv.sizes, data.partition_seed.value_or(seed));
      break;
    }
    case DataSource::kDir:
      out = graph::load_dataset_dir(data.dir);
      break;
  }
  if (data.minority_classes) out.minority_classes = *data.minority_classes;
  out.validate();
  return out;
}

}  // namespace fedmig::exp
