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

#include "fedmig/graph/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <fmt/os.h>
#include "json.hpp"

#include "fedmig/error.hpp"

namespace fedmig::graph {
namespace {

namespace fs = std::filesystem;

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Calls row(fields, line_no) for each data line; skips blank lines and a
// non-numeric first line (header).
template <class RowFn>
void for_each_row(const fs::path& path, RowFn row) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("{}: cannot open", path.string()));
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (first) {
      first = false;
      NodeId probe;
      if (!parse_number(fields[0], probe)) continue;
    }
    row(fields, line_no);
  }
}

[[noreturn]] void bad_row(const fs::path& path, std::size_t line_no,
                          std::string_view what) {
  throw ParseError(fmt::format("{}:{}: {}", path.string(), line_no, what));
}

}  // namespace

LocalGraph load_csv_graph(const fs::path& edges_path, const fs::path& features_path,
                          const fs::path& labels_path, const SplitSpec& split,
                          std::size_t num_classes) {
  std::map<NodeId, std::vector<double>> feats;
  std::size_t width = 0;
  for_each_row(features_path, [&](const auto& f, std::size_t ln) {
    if (f.size() < 2) bad_row(features_path, ln, "expected node_id and >= 1 feature");
    NodeId id;
    if (!parse_number(f[0], id)) bad_row(features_path, ln, "bad node id");
    std::vector<double> row(f.size() - 1);
    for (std::size_t k = 1; k < f.size(); ++k) {
      if (!parse_number(f[k], row[k - 1])) bad_row(features_path, ln, "bad feature value");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) bad_row(features_path, ln, "feature width differs from first row");
    if (!feats.emplace(id, std::move(row)).second) {
      throw StructuralError(fmt::format("{}:{}: duplicate node id {}",
                                        features_path.string(), ln, id));
    }
  });
  if (feats.empty()) throw ParseError(fmt::format("{}: no nodes", features_path.string()));

  LocalGraph g;
  g.num_nodes = feats.size();
  g.features = num::Tensor::zeros(g.num_nodes, width);
  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; const auto& [id, row] : feats) {
    index.emplace(id, i);
    g.node_ids.push_back(id);
    std::copy(row.begin(), row.end(), g.features.row_span(i).begin());
    ++i;
  }

  std::vector<bool> labelled(g.num_nodes, false);
  g.labels.assign(g.num_nodes, 0);
  for_each_row(labels_path, [&](const auto& f, std::size_t ln) {
    if (f.size() != 2) bad_row(labels_path, ln, "expected node_id,label");
    NodeId id;
    long long label;
    if (!parse_number(f[0], id) || !parse_number(f[1], label)) {
      bad_row(labels_path, ln, "bad integer");
    }
    auto it = index.find(id);
    if (it == index.end()) {
      throw StructuralError(fmt::format("{}:{}: label for unknown node {}",
                                        labels_path.string(), ln, id));
    }
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw StructuralError(fmt::format("{}:{}: label {} outside [0, {})",
                                        labels_path.string(), ln, label, num_classes));
    }
    if (labelled[it->second]) {
      throw StructuralError(fmt::format("{}:{}: duplicate label for node {}",
                                        labels_path.string(), ln, id));
    }
    labelled[it->second] = true;
    g.labels[it->second] = static_cast<std::size_t>(label);
  });
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    if (!labelled[i]) {
      throw StructuralError(fmt::format("node {} has no label", g.node_ids[i]));
    }
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for_each_row(edges_path, [&](const auto& f, std::size_t ln) {
    if (f.size() != 2) bad_row(edges_path, ln, "expected src,dst");
    NodeId a, b;
    if (!parse_number(f[0], a) || !parse_number(f[1], b)) bad_row(edges_path, ln, "bad node id");
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      throw StructuralError(fmt::format("{}:{}: dangling edge endpoint ({}, {})",
                                        edges_path.string(), ln, a, b));
    }
    edges.emplace_back(ia->second, ib->second);
  });
  g.adjacency = build_symmetric_csr(g.num_nodes, edges);
  g.apply_split(split);
  g.validate(num_classes);
  return g;
}

void write_csv_graph(const LocalGraph& g, const fs::path& edges_path,
                     const fs::path& features_path, const fs::path& labels_path) {
  {
    auto out = fmt::output_file(edges_path.string());
    out.print("src,dst\n");
    for (std::size_t i = 0; i < g.num_nodes; ++i)
      for (std::size_t j : g.adjacency.neighbors(i))
        if (i < j) out.print("{},{}\n", g.node_ids[i], g.node_ids[j]);
  }
  {
    auto out = fmt::output_file(features_path.string());
    out.print("node_id");
    for (std::size_t k = 0; k < g.feature_dim(); ++k) out.print(",f{}", k);
    out.print("\n");
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      out.print("{}", g.node_ids[i]);
      for (double v : g.features.row_span(i)) out.print(",{:.17g}", v);
      out.print("\n");
    }
  }
  {
    auto out = fmt::output_file(labels_path.string());
    out.print("node_id,label\n");
    for (std::size_t i = 0; i < g.num_nodes; ++i)
      out.print("{},{}\n", g.node_ids[i], g.labels[i]);
  }
}

void save_dataset_dir(const FederationDataset& data, const SplitSpec& split,
                      const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "fedmig.dataset";
  manifest["version"] = 1;
  manifest["num_classes"] = data.num_classes;
  manifest["minority_classes"] = data.minority_classes;
  manifest["split"] = {{"train", split.train}, {"val", split.val}, {"seed", split.seed}};
  nlohmann::json clients = nlohmann::json::array();
  for (std::size_t m = 0; m < data.clients.size(); ++m) {
    const std::string name = fmt::format("client_{:03}", m);
    fs::create_directories(dir / name);
    write_csv_graph(data.clients[m], dir / name / "edges.csv",
                    dir / name / "features.csv", dir / name / "labels.csv");
    clients.push_back(name);
  }
  manifest["clients"] = clients;
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
}

FederationDataset load_dataset_dir(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ParseError(fmt::format("{}: missing manifest.json", dir.string()));
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}/manifest.json: {}", dir.string(), e.what()));
  }
  if (manifest.value("format", "") != "fedmig.dataset") {
    throw ParseError(fmt::format("{}: not a fedmig dataset directory", dir.string()));
  }
  FederationDataset data;
  SplitSpec split;
  try {
    data.num_classes = manifest.at("num_classes").get<std::size_t>();
    data.minority_classes = manifest.at("minority_classes").get<std::vector<std::size_t>>();
    split.train = manifest.at("split").at("train").get<double>();
    split.val = manifest.at("split").at("val").get<double>();
    split.seed = manifest.at("split").at("seed").get<std::uint64_t>();
    for (const auto& name : manifest.at("clients")) {
      const fs::path c = dir / name.get<std::string>();
      data.clients.push_back(load_csv_graph(c / "edges.csv", c / "features.csv",
                                            c / "labels.csv", split, data.num_classes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}/manifest.json: {}", dir.string(), e.what()));
  }
  data.validate();
  return data;
}

}  // namespace fedmig::graph
