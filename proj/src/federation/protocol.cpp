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

#include "fedmig/federation/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fedmig/error.hpp"
#include "fedmig/models/networks.hpp"
#include "fedmig/rng.hpp"

namespace fedmig::fed {

using model::DiscriminatorParams;
using model::GeneratorParams;
using num::Tape;
using num::Tensor;
using num::Var;

Arm parse_arm(std::string_view name) {
  if (name == "graphfedmig") return Arm::kGraphFedMig;
  if (name == "local") return Arm::kLocal;
  if (name == "fedavg") return Arm::kFedAvg;
  if (name == "flhc") return Arm::kFlHc;
  throw ConfigError(fmt::format("unknown arm '{}' (graphfedmig, local, fedavg, flhc)", name));
}

std::string_view arm_name(Arm arm) {
  switch (arm) {
    case Arm::kGraphFedMig: return "graphfedmig";
    case Arm::kLocal: return "local";
    case Arm::kFedAvg: return "fedavg";
    case Arm::kFlHc: return "flhc";
  }
  return "unknown";
}

GeneratorAggregation parse_generator_aggregation(std::string_view name) {
  if (name == "weighted") return GeneratorAggregation::kWeighted;
  if (name == "correction_only") return GeneratorAggregation::kCorrectionOnly;
  throw ConfigError(
      fmt::format("unknown generator_aggregation '{}' (weighted, correction_only)", name));
}

void ProtocolConfig::validate() const {
  if (rounds == 0) throw ConfigError("rounds must be at least 1");
  if (!(threshold > -1.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in (-1, 1]");
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) throw ConfigError("lambda1/lambda2 must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0, 1)");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and >= 0");
  }
  if (hidden == 0 || latent == 0) throw ConfigError("model widths must be positive");
  dp.validate();
}

model::ModelDims ProtocolConfig::dims(std::size_t feature_dim, std::size_t num_classes) const {
  model::ModelDims d;
  d.feature_dim = feature_dim;
  d.num_classes = num_classes;
  d.hidden = hidden;
  d.latent = latent;
  d.disc_hidden = hidden;
  d.proj_hidden = hidden;
  d.proj_out = std::max<std::size_t>(1, latent / 2);
  return d;
}

ClientState make_client(std::size_t client_id, graph::LocalGraph graph, std::size_t num_classes,
                        const ProtocolConfig& cfg) {
  const model::ModelDims dims = cfg.dims(graph.feature_dim(), num_classes);
  num::AdamOptions adam;
  adam.learning_rate = cfg.learning_rate;
  ClientState c;
  c.client_id = client_id;
  c.class_counts = train_class_counts(graph, num_classes);
  c.graph = std::move(graph);
  c.generator = model::init_generator(dims, derive_seed(cfg.seed, {stream::kGeneratorInit}));
  c.projection = model::init_projection(dims, derive_seed(cfg.seed, {stream::kProjectionInit}));
  c.generator_opt = model::BundleOptimizer<model::GeneratorT>(c.generator, adam);
  c.projection_opt = model::BundleOptimizer<model::ProjectionT>(c.projection, adam);
  c.privacy_rng.seed(derive_seed(cfg.seed, {stream::kPrivacy, client_id}));
  return c;
}

namespace {

// Row-selection matrix averaging the train nodes of each listed class.
Tensor class_mean_selector(const graph::LocalGraph& g, const std::vector<std::size_t>& classes,
                           const std::vector<double>& counts) {
  Tensor a = Tensor::zeros(classes.size(), g.num_nodes);
  for (std::size_t r = 0; r < classes.size(); ++r) {
    const std::size_t h = classes[r];
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      if (g.train_mask[i] && g.labels[i] == h) a(r, i) = 1.0 / counts[h];
    }
  }
  return a;
}

// Posterior-weighted averaging of every node for each listed class.
Tensor soft_mean_selector(const Tensor& probs, const std::vector<std::size_t>& classes) {
  Tensor a = Tensor::zeros(classes.size(), probs.rows());
  for (std::size_t r = 0; r < classes.size(); ++r) {
    double mass = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) mass += probs(i, classes[r]);
    for (std::size_t i = 0; i < probs.rows(); ++i) a(r, i) = probs(i, classes[r]) / mass;
  }
  return a;
}

void require_finite(double value, std::size_t client, const char* component) {
  if (!std::isfinite(value)) {
    throw TrainingError(fmt::format("client {}: non-finite {} loss", client, component));
  }
}

}  // namespace

loss::LossBreakdown client_local_train(ClientState& client, const ClusterContext* context,
                                       const LocalTrainOptions& options) {
  if (options.lambda1 < 0.0 || options.lambda2 < 0.0) {
    throw ConfigError("client_local_train: negative loss weight");
  }
  const graph::LocalGraph& g = client.graph;
  const std::size_t num_classes = client.class_counts.size();
  std::vector<std::size_t> own_classes;
  double total_count = 0.0;
  for (std::size_t h = 0; h < num_classes; ++h) {
    if (client.class_counts[h] > 0.0) {
      own_classes.push_back(h);
      total_count += client.class_counts[h];
    }
  }
  const bool use_gan = options.gan && context != nullptr && !own_classes.empty();
  std::vector<std::size_t> mi_classes, mi_positive;
  if (options.mi_loss && context != nullptr) {
    const auto gen_classes = context->generated.present();
    for (std::size_t h : own_classes) {
      auto it = std::find(gen_classes.begin(), gen_classes.end(), h);
      if (it == gen_classes.end()) continue;
      mi_classes.push_back(h);
      mi_positive.push_back(static_cast<std::size_t>(it - gen_classes.begin()));
    }
  }
  const bool use_mi = !mi_classes.empty();

  Tensor class_freq = Tensor::zeros(1, own_classes.size());
  for (std::size_t r = 0; r < own_classes.size(); ++r) {
    class_freq(0, r) = client.class_counts[own_classes[r]] / total_count;
  }
  const Tensor lp_selector = class_mean_selector(g, own_classes, client.class_counts);
  const Tensor mi_selector = class_mean_selector(g, mi_classes, client.class_counts);

  loss::LossBreakdown last;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Tape tape;
    const auto gen = model::bind(tape, client.generator, true);
    const auto out = model::generator_forward(gen, tape.constant(g.features), g.adjacency);
    const Var ce = loss::classification_loss(out.logits, g.labels, g.train_mask);
    Var total = ce;
    double gan_value = 0.0, mi_value = 0.0;

    if (use_gan) {
      const auto disc = model::bind(tape, context->discriminator, false);
      const Var weights = tape.constant(class_freq);
      const Var lp = num::matmul(tape.constant(lp_selector), out.latent);
      const Var p_true =
          num::matmul(weights, num::detach(model::discriminator_forward(disc, num::detach(lp))));
      const Tensor probs = num::softmax_rows(out.logits.value());
      const Var g_hat = num::matmul(tape.constant(soft_mean_selector(probs, own_classes)),
                                    out.latent);
      const Var q_own = num::matmul(weights, model::discriminator_forward(disc, g_hat));
      const double peers = static_cast<double>(context->cluster_size) - 1.0;
      Tensor peer_sum = context->posterior.as_row();
      for (double& v : peer_sum.values()) v *= peers;
      const Var s = num::add(tape.constant(std::move(peer_sum)), q_own);
      const Var gan = loss::gan_diversity_loss(p_true, s, num_classes);
      gan_value = gan.value().item();
      require_finite(gan_value, client.client_id, "gan");
      if (options.lambda1 > 0.0) total = num::add(total, num::scale(gan, options.lambda1));
    }

    bool mi_in_update = false;
    model::ProjectionVars proj{};
    if (use_mi) {
      proj = model::bind(tape, client.projection, true);
      const Var lp = num::matmul(tape.constant(mi_selector), out.latent);
      const Var mi = loss::infonce_mi_loss(proj, lp, mi_positive,
                                           tape.constant(context->generated.present_rows()),
                                           options.temperature);
      mi_value = mi.value().item();
      require_finite(mi_value, client.client_id, "mi");
      if (options.lambda2 > 0.0) {
        total = num::add(total, num::scale(mi, options.lambda2));
        mi_in_update = true;
      }
    }

    const double ce_value = ce.value().item();
    require_finite(ce_value, client.client_id, "ce");
    last = loss::composite_loss(ce_value, gan_value, mi_value, options.lambda1, options.lambda2);
    require_finite(last.composite, client.client_id, "composite");

    tape.backward(total);
    client.generator_opt.step(client.generator, model::gradients(tape, gen));
    if (mi_in_update) client.projection_opt.step(client.projection, model::gradients(tape, proj));
  }
  return last;
}

loss::ClassDistribution class_posterior(const DiscriminatorParams& disc, const PrototypeSet& set) {
  const auto classes = set.present();
  loss::ClassDistribution out{std::vector<double>(set.num_classes(), 0.0)};
  if (classes.empty()) return out;
  const Tensor probs = model::evaluate_discriminator(disc, set.present_rows());
  const auto freq = set.frequencies();
  for (std::size_t r = 0; r < classes.size(); ++r) {
    for (std::size_t y = 0; y < out.size(); ++y) out.probs[y] += freq[classes[r]] * probs(r, y);
  }
  return out;
}

std::vector<MemberWeight> mi_weights_from_divergences(std::span<const std::size_t> client_ids,
                                                      std::span<const double> mi, double gamma) {
  if (client_ids.size() != mi.size()) throw ShapeError("mi weights: ids and divergences differ");
  double total = 0.0;
  for (double v : mi) total += v;
  const double size = static_cast<double>(mi.size());
  std::vector<MemberWeight> out(mi.size());
  for (std::size_t i = 0; i < mi.size(); ++i) {
    const double raw = total > 0.0 ? size * mi[i] / total : 1.0;
    out[i] = {client_ids[i], mi[i], raw, std::clamp(raw, 1.0 - gamma, 1.0 + gamma)};
  }
  return out;
}

MiWeights compute_mi_weights(const DiscriminatorParams& disc,
                             std::span<const MemberPrototypes> members,
                             const PrototypeSet& generated, double gamma) {
  std::vector<const MemberPrototypes*> sorted;
  for (const auto& m : members) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  MiWeights out;
  out.cluster_posterior = class_posterior(disc, generated);
  std::vector<std::size_t> ids;
  std::vector<double> mi;
  for (const auto* m : sorted) {
    ids.push_back(m->client_id);
    const auto own = class_posterior(disc, m->prototypes);
    const bool defined = own.mass() > 0.0 && out.cluster_posterior.mass() > 0.0;
    mi.push_back(defined ? loss::jensen_shannon_divergence(own, out.cluster_posterior) : 0.0);
  }
  out.members = mi_weights_from_divergences(ids, mi, gamma);
  return out;
}

void apply_local_correction(GeneratorParams& generator, double weight) {
  if (!std::isfinite(weight)) throw ProtocolError("apply_local_correction: non-finite weight");
  if (weight == 1.0) return;
  model::visit_fields(generator, [&](std::string_view, Tensor& t) {
    for (double& v : t.values()) v *= weight;
  });
}

ClusterContext ClusterState::context() const {
  return {discriminator, prototypes, generated, posterior, members.size()};
}

std::vector<double> train_cluster_discriminator(ClusterState& cluster, std::size_t d_steps,
                                                bool class_anchor) {
  std::vector<std::size_t> classes;
  for (std::size_t h = 0; h < cluster.prototypes.num_classes(); ++h) {
    if (cluster.prototypes.has(h) && cluster.generated.has(h)) classes.push_back(h);
  }
  std::vector<double> losses;
  if (classes.empty()) {
    spdlog::warn("cluster {}: no class with prototypes; discriminator not trained",
                 cluster.cluster_id);
    return losses;
  }
  const std::size_t d = cluster.prototypes.dim();
  Tensor synthetic = Tensor::zeros(classes.size(), d), protos = Tensor::zeros(classes.size(), d);
  for (std::size_t r = 0; r < classes.size(); ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      synthetic(r, j) = cluster.generated.values(classes[r], j);
      protos(r, j) = cluster.prototypes.values(classes[r], j);
    }
  }
  Tensor one_hot = Tensor::zeros(classes.size(), cluster.prototypes.num_classes());
  for (std::size_t r = 0; r < classes.size(); ++r) one_hot(r, classes[r]) = 1.0;
  for (std::size_t step = 0; step < d_steps; ++step) {
    Tape tape;
    const auto disc = model::bind(tape, cluster.discriminator, true);
    const Var protos_var = tape.constant(protos);
    Var l = loss::discriminator_loss(disc, tape.constant(synthetic), protos_var);
    if (class_anchor) {
      const Var log_p = num::log_clamped(model::discriminator_forward(disc, protos_var));
      const Var ce = num::sum(num::mul(tape.constant(one_hot), log_p));
      l = num::add(l, num::scale(ce, -1.0 / static_cast<double>(classes.size())));
    }
    const double value = l.value().item();
    if (!std::isfinite(value)) {
      throw TrainingError(fmt::format("cluster {}: non-finite discriminator loss",
                                      cluster.cluster_id));
    }
    losses.push_back(value);
    tape.backward(l);
    cluster.discriminator_opt.step(cluster.discriminator, model::gradients(tape, disc));
  }
  return losses;
}

DiscriminatorParams aggregate_discriminators(std::span<const DiscriminatorParams> discriminators,
                                             std::span<const std::size_t> cluster_sizes,
                                             std::size_t num_clients) {
  if (discriminators.empty() || discriminators.size() != cluster_sizes.size()) {
    throw ProtocolError("aggregate_discriminators: one size per discriminator required");
  }
  if (num_clients == 0) throw ProtocolError("aggregate_discriminators: zero clients");
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t s : cluster_sizes) {
    w.push_back(static_cast<double>(s) / static_cast<double>(num_clients));
    total += w.back();
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ProtocolError(fmt::format("aggregate_discriminators: weights sum to {}", total));
  }
  if (discriminators.size() == 1) return discriminators.front();
  DiscriminatorParams out = discriminators.front();
  model::visit_fields(out, [](std::string_view, Tensor& t) { t.fill(0.0); });
  for (std::size_t k = 0; k < discriminators.size(); ++k) {
    std::vector<const Tensor*> src;
    model::visit_fields(discriminators[k],
                        [&](std::string_view, const Tensor& t) { src.push_back(&t); });
    std::size_t i = 0;
    model::visit_fields(out, [&](std::string_view, Tensor& t) {
      num::require_same_shape(t, *src[i], "aggregate_discriminators");
      for (std::size_t e = 0; e < t.size(); ++e) t[e] += w[k] * (*src[i])[e];
      ++i;
    });
  }
  return out;
}

namespace {

// sum_m coeffs[m] * gens[m], restricted to backbone and head if asked.
GeneratorParams weighted_generator_sum(std::span<const GeneratorParams* const> gens,
                                       std::span<const double> coeffs, bool backbone_only) {
  GeneratorParams out = *gens.front();
  model::visit_fields(out, [&](std::string_view name, Tensor& t) {
    if (!backbone_only || model::is_backbone_or_head(name)) t.fill(0.0);
  });
  for (std::size_t m = 0; m < gens.size(); ++m) {
    std::vector<const Tensor*> src;
    model::visit_fields(*gens[m], [&](std::string_view, const Tensor& t) { src.push_back(&t); });
    std::size_t i = 0;
    model::visit_fields(out, [&](std::string_view name, Tensor& t) {
      const Tensor& s = *src[i++];
      if (backbone_only && !model::is_backbone_or_head(name)) return;
      num::require_same_shape(t, s, "generator aggregation");
      for (std::size_t e = 0; e < t.size(); ++e) t[e] += coeffs[m] * s[e];
    });
  }
  return out;
}

}  // namespace

void fedavg_generators(std::span<GeneratorParams* const> generators,
                       std::span<const double> node_counts) {
  if (generators.size() != node_counts.size()) {
    throw ShapeError("fedavg_generators: one node count per generator required");
  }
  if (generators.size() <= 1) return;
  const double total = std::accumulate(node_counts.begin(), node_counts.end(), 0.0);
  if (!(total > 0.0)) throw ProtocolError("fedavg_generators: zero total node count");
  std::vector<double> coeffs;
  for (double n : node_counts) coeffs.push_back(n / total);
  std::vector<const GeneratorParams*> view(generators.begin(), generators.end());
  const GeneratorParams avg = weighted_generator_sum(view, coeffs, true);
  for (GeneratorParams* g : generators) {
    std::vector<const Tensor*> src;
    model::visit_fields(avg, [&](std::string_view, const Tensor& t) { src.push_back(&t); });
    std::size_t i = 0;
    model::visit_fields(*g, [&](std::string_view name, Tensor& t) {
      const Tensor& s = *src[i++];
      if (model::is_backbone_or_head(name)) t = s;
    });
  }
}

GeneratorParams mi_weighted_aggregate(std::span<const GeneratorParams* const> corrected,
                                      std::span<const double> node_counts,
                                      std::span<const double> weights) {
  if (corrected.empty() || corrected.size() != node_counts.size() ||
      corrected.size() != weights.size()) {
    throw ShapeError("mi_weighted_aggregate: one node count and weight per generator required");
  }
  double mass = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) mass += node_counts[m] * weights[m];
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ProtocolError("mi_weighted_aggregate: total weight must be positive");
  }
  std::vector<double> coeffs;
  for (double n : node_counts) coeffs.push_back(n / mass);
  return weighted_generator_sum(corrected, coeffs, false);
}

ClusterAssignment pretrain_and_cluster(const std::vector<ClientState>& clients, double threshold,
                                       std::size_t pre_epochs, double learning_rate,
                                       std::size_t target_clusters) {
  if (clients.empty()) throw ConfigError("pretrain_and_cluster: no clients");
  std::vector<PrototypeSet> reps;
  reps.reserve(clients.size());
  for (const ClientState& c : clients) {
    ClientState scratch;
    scratch.client_id = c.client_id;
    scratch.graph = c.graph;
    scratch.generator = c.generator;
    scratch.class_counts = c.class_counts;
    num::AdamOptions adam;
    adam.learning_rate = learning_rate;
    scratch.generator_opt = model::BundleOptimizer<model::GeneratorT>(scratch.generator, adam);
    LocalTrainOptions opts;
    opts.epochs = pre_epochs;
    opts.gan = false;
    opts.mi_loss = false;
    client_local_train(scratch, nullptr, opts);
    const auto eval = model::evaluate_generator(scratch.generator, scratch.graph);
    reps.push_back(compute_local_prototypes(eval.latent, scratch.graph, c.class_counts.size()));
  }
  return agglomerate(reps, threshold, target_clusters);
}

std::size_t message_bytes(std::size_t elements) {
  return kBytesPerElement * elements + kMessageHeaderBytes;
}

std::size_t comm_accounting(std::span<const std::size_t> message_elements) {
  std::size_t total = 0;
  for (std::size_t n : message_elements) total += message_bytes(n);
  return total;
}

namespace {

double mean_of(const std::vector<loss::LossBreakdown>& losses, double loss::LossBreakdown::*field) {
  if (losses.empty()) return 0.0;
  double s = 0.0;
  for (const auto& l : losses) s += l.*field;
  return s / static_cast<double>(losses.size());
}

template <template <class> class P>
std::vector<std::size_t> tensor_sizes(const P<Tensor>& params, bool backbone_only = false) {
  std::vector<std::size_t> out;
  model::visit_fields(params, [&](std::string_view name, const Tensor& t) {
    if (!backbone_only || model::is_backbone_or_head(name)) out.push_back(t.size());
  });
  return out;
}

}  // namespace

double RoundReport::mean_ce() const { return mean_of(losses, &loss::LossBreakdown::ce); }
double RoundReport::mean_gan() const { return mean_of(losses, &loss::LossBreakdown::gan); }
double RoundReport::mean_mi() const { return mean_of(losses, &loss::LossBreakdown::mi); }
std::size_t RoundReport::total_up() const {
  return std::accumulate(bytes_up.begin(), bytes_up.end(), std::size_t{0});
}
std::size_t RoundReport::total_down() const {
  return std::accumulate(bytes_down.begin(), bytes_down.end(), std::size_t{0});
}

Federation::Federation(graph::FederationDataset data, ProtocolConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)) {
  cfg_.validate();
  data_.validate();
  const std::size_t m = data_.clients.size();
  dims_ = cfg_.dims(data_.feature_dim(), data_.num_classes);
  for (std::size_t i = 0; i < m; ++i) {
    state_.clients.push_back(make_client(i, data_.clients[i], data_.num_classes, cfg_));
  }

  const bool clustered = cfg_.arm == Arm::kGraphFedMig || cfg_.arm == Arm::kFlHc;
  if (cfg_.arm == Arm::kLocal) {
    assignment_ = singleton_clusters(m, cfg_.threshold);
  } else if (cfg_.arm == Arm::kFedAvg || (clustered && cfg_.clusters == 1)) {
    assignment_ = single_cluster(m, cfg_.threshold);
  } else {
    assignment_ = pretrain_and_cluster(state_.clients, cfg_.threshold, cfg_.pre_epochs,
                                       cfg_.learning_rate, cfg_.clusters);
    clustering_bytes_ = message_bytes(data_.num_classes * dims_.latent) +
                        message_bytes(data_.num_classes);
  }
  spdlog::info("{}: {} clients in {} clusters", arm_name(cfg_.arm), m, assignment_.num_clusters);

  num::AdamOptions adam;
  adam.learning_rate = cfg_.learning_rate;
  state_.global =
      model::init_discriminator(dims_, derive_seed(cfg_.seed, {stream::kDiscriminatorInit}));
  for (std::size_t k = 0; k < assignment_.num_clusters; ++k) {
    ClusterState c;
    c.cluster_id = k;
    c.members = assignment_.members(k);
    c.discriminator = state_.global;
    c.discriminator_opt = model::BundleOptimizer<model::DiscriminatorT>(c.discriminator, adam);
    state_.clusters.push_back(std::move(c));
  }
}

void Federation::stage(std::string_view name, std::size_t client) const {
  if (hook_) hook_(name, client);
}

RoundReport Federation::run_round() {
  State snapshot = state_;
  const std::size_t m = state_.clients.size();
  RoundReport report;
  report.round = state_.round;
  report.arm = cfg_.arm;
  report.losses.assign(m, {});
  report.mi.assign(m, 0.0);
  report.weights.assign(m, 1.0);
  report.bytes_up.assign(m, state_.round == 0 ? clustering_bytes_ : 0);
  report.bytes_down.assign(m, 0);
  try {
    if (cfg_.arm == Arm::kGraphFedMig) {
      run_graphfedmig_round(report);
    } else {
      run_fedavg_round(report);
    }
    stage("evaluate", 0);
    report.metrics = evaluate();
  } catch (...) {
    state_ = std::move(snapshot);
    throw;
  }
  ++state_.round;
  spdlog::debug("round {}: acc {:.4f} minority recall {:.4f} ce {:.4f}", report.round,
                report.metrics.overall_accuracy, report.metrics.minority_recall, report.mean_ce());
  return report;
}

std::vector<RoundReport> Federation::run() {
  std::vector<RoundReport> out;
  while (state_.round < cfg_.rounds) out.push_back(run_round());
  return out;
}

void Federation::run_fedavg_round(RoundReport& report) {
  LocalTrainOptions opts;
  opts.lambda1 = 0.0;
  opts.lambda2 = 0.0;
  opts.epochs = cfg_.local_epochs;
  opts.gan = false;
  opts.mi_loss = false;
  for (ClientState& c : state_.clients) {
    stage("train", c.client_id);
    report.losses[c.client_id] = client_local_train(c, nullptr, opts);
  }
  if (cfg_.arm == Arm::kLocal) return;
  const auto sizes = tensor_sizes(state_.clients.front().generator, true);
  for (const ClusterState& cluster : state_.clusters) {
    std::vector<GeneratorParams*> gens;
    std::vector<double> counts;
    for (std::size_t id : cluster.members) {
      gens.push_back(&state_.clients[id].generator);
      counts.push_back(static_cast<double>(state_.clients[id].graph.num_nodes));
      report.bytes_up[id] += comm_accounting(sizes);
      report.bytes_down[id] += comm_accounting(sizes);
    }
    stage("aggregate", cluster.cluster_id);
    fedavg_generators(gens, counts);
  }
}

void Federation::run_graphfedmig_round(RoundReport& report) {
  const std::size_t num_clients = state_.clients.size();
  const std::size_t num_classes = data_.num_classes;
  const auto disc_sizes = tensor_sizes(state_.global);
  const auto gen_sizes = tensor_sizes(state_.clients.front().generator);
  const auto backbone_sizes = tensor_sizes(state_.clients.front().generator, true);

  // (1) broadcast and (2) local training
  LocalTrainOptions opts;
  opts.lambda1 = cfg_.lambda1;
  opts.lambda2 = cfg_.lambda2;
  opts.epochs = cfg_.local_epochs;
  opts.temperature = cfg_.temperature;
  opts.gan = cfg_.ablation.gan;
  opts.mi_loss = cfg_.ablation.mi_loss;
  // Server state is only exchanged when some active term consumes it.
  const bool uses_context =
      (opts.gan && opts.lambda1 > 0.0) || (opts.mi_loss && opts.lambda2 > 0.0);
  const bool uses_prototypes = uses_context || cfg_.ablation.migma;
  const auto& upload_sizes = cfg_.ablation.migma ? gen_sizes : backbone_sizes;
  for (const ClusterState& cluster : state_.clusters) {
    std::optional<ClusterContext> ctx;
    if (cluster.has_context && uses_context) ctx = cluster.context();
    for (std::size_t id : cluster.members) {
      if (ctx) {
        std::vector<std::size_t> msgs = disc_sizes;
        msgs.push_back(ctx->prototypes.present().size() * dims_.latent);
        msgs.push_back(ctx->generated.present().size() * dims_.latent);
        msgs.push_back(num_classes);
        report.bytes_down[id] += comm_accounting(msgs);
      }
      stage("train", id);
      report.losses[id] = client_local_train(state_.clients[id], ctx ? &*ctx : nullptr, opts);
      if (!opts.gan) report.losses[id].gan = 0.0;
      if (!opts.mi_loss) report.losses[id].mi = 0.0;
    }
  }

  // (3) uploads
  std::vector<PrototypeSet> uploaded_lp(num_clients), uploaded_gen(num_clients);
  for (ClientState& c : state_.clients) {
    stage("upload", c.client_id);
    const auto eval = model::evaluate_generator(c.generator, c.graph);
    c.local_prototypes = compute_local_prototypes(eval.latent, c.graph, num_classes);
    c.generated_means = compute_generated_means(eval.latent, eval.logits, c.class_counts);
    auto perturb = [&](const PrototypeSet& p) {
      PrototypeSet out = p;
      if (!cfg_.dp.enabled) return out;
      const auto classes = p.present();
      std::vector<double> counts;
      for (std::size_t h : classes) counts.push_back(p.counts[h]);
      const Tensor noisy = dp::clip_and_perturb(p.present_rows(), cfg_.dp, c.privacy_rng, counts);
      for (std::size_t r = 0; r < classes.size(); ++r) {
        for (std::size_t j = 0; j < p.dim(); ++j) out.values(classes[r], j) = noisy(r, j);
      }
      return out;
    };
    std::vector<std::size_t> msgs = upload_sizes;
    if (uses_prototypes) {
      uploaded_lp[c.client_id] = perturb(c.local_prototypes);
      uploaded_gen[c.client_id] = perturb(c.generated_means);
      msgs.push_back(uploaded_lp[c.client_id].present().size() * dims_.latent);
      msgs.push_back(uploaded_gen[c.client_id].present().size() * dims_.latent);
      msgs.push_back(num_classes);
    }
    report.bytes_up[c.client_id] += comm_accounting(msgs);
  }

  // (4) server-side aggregation, discriminator training, MI weights
  // (5) client correction
  for (ClusterState& cluster : state_.clusters) {
    stage("server", cluster.cluster_id);
    if (uses_prototypes) {
      std::vector<PrototypeSet> lps, gens;
      std::vector<MemberPrototypes> member_lp;
      for (std::size_t id : cluster.members) {
        lps.push_back(uploaded_lp[id]);
        gens.push_back(uploaded_gen[id]);
        member_lp.push_back({id, uploaded_lp[id]});
      }
      cluster.prototypes = aggregate_cluster_prototypes(lps);
      cluster.generated = aggregate_generated_cluster_features(gens);
      train_cluster_discriminator(cluster, cfg_.d_steps, cfg_.discriminator_anchor);
      MiWeights mw = compute_mi_weights(cluster.discriminator, member_lp, cluster.generated,
                                        cfg_.gamma);
      cluster.posterior = std::move(mw.cluster_posterior);
      cluster.weights = std::move(mw.members);
      cluster.has_context = true;
    } else {
      cluster.weights.clear();
      for (std::size_t id : cluster.members) cluster.weights.push_back({id, 0.0, 1.0, 1.0});
    }

    std::vector<const GeneratorParams*> gens_view;
    std::vector<double> counts, applied;
    for (const MemberWeight& w : cluster.weights) {
      report.mi[w.client_id] = w.mi;
      report.weights[w.client_id] = cfg_.ablation.migma ? w.weight : 1.0;
      counts.push_back(static_cast<double>(state_.clients[w.client_id].graph.num_nodes));
      applied.push_back(report.weights[w.client_id]);
    }
    if (cfg_.ablation.migma) {
      for (const MemberWeight& w : cluster.weights) {
        stage("correct", w.client_id);
        apply_local_correction(state_.clients[w.client_id].generator, w.weight);
        report.bytes_down[w.client_id] += message_bytes(1);
      }
    }
    for (const MemberWeight& w : cluster.weights) {
      gens_view.push_back(&state_.clients[w.client_id].generator);
    }
    cluster.virtual_generator = mi_weighted_aggregate(gens_view, counts, applied);

    if (cluster.members.size() > 1) {
      if (cfg_.ablation.migma) {
        if (cfg_.generator_aggregation == GeneratorAggregation::kCorrectionOnly) continue;
        for (std::size_t id : cluster.members) {
          state_.clients[id].generator = *cluster.virtual_generator;
          report.bytes_down[id] += comm_accounting(gen_sizes);
        }
      } else {
        std::vector<GeneratorParams*> members;
        std::vector<double> member_counts;
        for (std::size_t id : cluster.members) {
          members.push_back(&state_.clients[id].generator);
          member_counts.push_back(static_cast<double>(state_.clients[id].graph.num_nodes));
          report.bytes_down[id] += comm_accounting(backbone_sizes);
        }
        fedavg_generators(members, member_counts);
      }
    }
  }

  // (6) discriminator aggregation
  stage("aggregate", 0);
  std::vector<DiscriminatorParams> discs;
  std::vector<std::size_t> sizes;
  for (const ClusterState& cluster : state_.clusters) {
    discs.push_back(cluster.discriminator);
    sizes.push_back(cluster.members.size());
  }
  state_.global = aggregate_discriminators(discs, sizes, num_clients);
  for (ClusterState& cluster : state_.clusters) cluster.discriminator = state_.global;
}

std::vector<std::size_t> Federation::predictions(std::size_t client) const {
  const ClientState& c = state_.clients.at(client);
  return model::argmax_rows(model::evaluate_generator(c.generator, c.graph).logits);
}

num::Tensor Federation::embeddings(std::size_t client) const {
  const ClientState& c = state_.clients.at(client);
  return model::evaluate_generator(c.generator, c.graph).latent;
}

exp::MetricsBundle Federation::evaluate() const {
  std::vector<std::size_t> preds, labels;
  std::vector<bool> mask;
  for (std::size_t m = 0; m < state_.clients.size(); ++m) {
    const auto p = predictions(m);
    const graph::LocalGraph& g = state_.clients[m].graph;
    preds.insert(preds.end(), p.begin(), p.end());
    labels.insert(labels.end(), g.labels.begin(), g.labels.end());
    mask.insert(mask.end(), g.test_mask.begin(), g.test_mask.end());
  }
  return exp::evaluate(preds, labels, mask, data_.minority_classes, data_.num_classes);
}

std::vector<RoundReport> run_baseline(Arm mode, const graph::FederationDataset& data,
                                      ProtocolConfig cfg) {
  if (mode == Arm::kGraphFedMig) throw ConfigError("run_baseline: not a baseline arm");
  cfg.arm = mode;
  Federation fed(data, std::move(cfg));
  return fed.run();
}

}  // namespace fedmig::fed
