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
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "fedmig/exp/metrics.hpp"
#include "fedmig/federation/clustering.hpp"
#include "fedmig/federation/prototypes.hpp"
#include "fedmig/graph/local_graph.hpp"
#include "fedmig/losses/losses.hpp"
#include "fedmig/models/params.hpp"
#include "fedmig/privacy/dp.hpp"

namespace fedmig::fed {

enum class Arm { kGraphFedMig, kLocal, kFedAvg, kFlHc };

Arm parse_arm(std::string_view name);
std::string_view arm_name(Arm arm);

// How generators are combined inside a cluster once MIGMA weights exist.
// With MIGMA off both modes fall back to FedAvg of backbone and head.
//   kWeighted: members adopt the MI-weighted mean of the corrected generators.
//   kCorrectionOnly: the correction replaces aggregation; no averaging.
enum class GeneratorAggregation { kWeighted, kCorrectionOnly };

GeneratorAggregation parse_generator_aggregation(std::string_view name);

struct Ablation {
  bool gan = true;
  bool mi_loss = true;
  bool migma = true;

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct ProtocolConfig {
  Arm arm = Arm::kGraphFedMig;
  std::size_t rounds = 100;
  double threshold = 0.8;
  // > 0: merge down to exactly this many clusters instead of using the
  // threshold. 1 skips pretraining altogether.
  std::size_t clusters = 0;
  double lambda1 = 1.0;
  double lambda2 = 1e-5;
  double gamma = 0.5;
  double temperature = 1.0;
  std::size_t local_epochs = 3;
  std::size_t pre_epochs = 5;
  std::size_t d_steps = 1;
  double learning_rate = 0.01;
  Ablation ablation;
  GeneratorAggregation generator_aggregation = GeneratorAggregation::kWeighted;
  // Adds cross-entropy of D(cp^h) against class h to the discriminator loss.
  bool discriminator_anchor = false;
  dp::DpConfig dp;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  std::size_t latent = 64;

  void validate() const;
  model::ModelDims dims(std::size_t feature_dim, std::size_t num_classes) const;
};

struct ClientState {
  std::size_t client_id = 0;
  graph::LocalGraph graph;
  model::GeneratorParams generator;
  model::ProjectionParams projection;
  model::BundleOptimizer<model::GeneratorT> generator_opt;
  model::BundleOptimizer<model::ProjectionT> projection_opt;
  std::vector<double> class_counts;  // train nodes per class
  PrototypeSet local_prototypes;     // lp, last computed
  PrototypeSet generated_means;      // g-hat, last computed
  std::mt19937_64 privacy_rng;
};

/// Initial state for one client. Generator and projection start from a
/// shared seed so that latent spaces are comparable across clients.
ClientState make_client(std::size_t client_id, graph::LocalGraph graph, std::size_t num_classes,
                        const ProtocolConfig& cfg);

// What the server broadcasts to the members of one cluster.
struct ClusterContext {
  model::DiscriminatorParams discriminator;
  PrototypeSet prototypes;            // cp
  PrototypeSet generated;             // cz-tilde
  loss::ClassDistribution posterior;  // q-bar
  std::size_t cluster_size = 1;
};

struct LocalTrainOptions {
  double lambda1 = 1.0;
  double lambda2 = 1e-5;
  std::size_t epochs = 3;
  double temperature = 1.0;
  bool gan = true;
  bool mi_loss = true;
};

/// `epochs` full-batch Adam steps on ce + lambda1 gan + lambda2 mi. Without
/// a context (or with a term disabled) only the remaining terms are used. A
/// term whose lambda is zero is still evaluated and reported but takes no
/// part in the update. Returns the breakdown of the last epoch, measured
/// before its update. TrainingError names the non-finite component.
loss::LossBreakdown client_local_train(ClientState& client, const ClusterContext* context,
                                       const LocalTrainOptions& options);

/// Client posterior sum_h f_h D(x^h) over the set's present classes, with
/// f the set's normalized counts.
loss::ClassDistribution class_posterior(const model::DiscriminatorParams& disc,
                                        const PrototypeSet& set);

struct MemberWeight {
  std::size_t client_id = 0;
  double mi = 0.0;
  double raw_weight = 1.0;  // before clipping
  double weight = 1.0;

  friend bool operator==(const MemberWeight&, const MemberWeight&) = default;
};

struct MemberPrototypes {
  std::size_t client_id = 0;
  PrototypeSet prototypes;
};

struct MiWeights {
  loss::ClassDistribution cluster_posterior;
  std::vector<MemberWeight> members;  // sorted by client id
};

/// W_m = |c| MI_m / sum MI clipped to [1 - gamma, 1 + gamma]; all ones when
/// the divergences sum to zero.
std::vector<MemberWeight> mi_weights_from_divergences(std::span<const std::size_t> client_ids,
                                                      std::span<const double> mi, double gamma);

MiWeights compute_mi_weights(const model::DiscriminatorParams& disc,
                             std::span<const MemberPrototypes> members,
                             const PrototypeSet& generated, double gamma);

// Multiplies every generator tensor by `weight`. ProtocolError if non-finite.
void apply_local_correction(model::GeneratorParams& generator, double weight);

struct ClusterState {
  std::size_t cluster_id = 0;
  std::vector<std::size_t> members;
  model::DiscriminatorParams discriminator;
  model::BundleOptimizer<model::DiscriminatorT> discriminator_opt;
  PrototypeSet prototypes;  // cp
  PrototypeSet generated;   // cz-tilde
  loss::ClassDistribution posterior;
  std::vector<MemberWeight> weights;
  std::optional<model::GeneratorParams> virtual_generator;
  bool has_context = false;

  ClusterContext context() const;
};

/// Adam steps on the discriminator loss over classes present in both cp and
/// cz-tilde. With `class_anchor` the loss also includes the cross-entropy of
/// D(cp^h) against label h. Returns the loss before each step; empty (with a warning) when
/// no class is defined.
std::vector<double> train_cluster_discriminator(ClusterState& cluster, std::size_t d_steps,
                                                bool class_anchor = false);

/// sum_k (|c_k| / M) phi_k. ProtocolError unless the weights sum to one.
model::DiscriminatorParams aggregate_discriminators(
    std::span<const model::DiscriminatorParams> discriminators,
    std::span<const std::size_t> cluster_sizes, std::size_t num_clients);

/// Replaces backbone and head of every generator with the node-count
/// weighted mean, summed in the given order. Adapters stay local.
void fedavg_generators(std::span<model::GeneratorParams* const> generators,
                       std::span<const double> node_counts);

/// Mean of corrected generators (theta'_m = W_m theta_m) over every tensor:
/// sum_m N_m theta'_m / sum_m N_m W_m. Equals FedAvg when all W_m are one.
model::GeneratorParams mi_weighted_aggregate(
    std::span<const model::GeneratorParams* const> corrected, std::span<const double> node_counts,
    std::span<const double> weights);

/// Pretrains a scratch copy of each client's generator with cross-entropy,
/// takes per-class train-node means of the generated features and clusters
/// them with `agglomerate`.
ClusterAssignment pretrain_and_cluster(const std::vector<ClientState>& clients, double threshold,
                                       std::size_t pre_epochs, double learning_rate = 0.01,
                                       std::size_t target_clusters = 0);

inline constexpr std::size_t kBytesPerElement = 4;
inline constexpr std::size_t kMessageHeaderBytes = 64;

// 4 bytes per element plus one header per tensor message.
std::size_t message_bytes(std::size_t elements);
std::size_t comm_accounting(std::span<const std::size_t> message_elements);

struct RoundReport {
  std::size_t round = 0;
  Arm arm = Arm::kGraphFedMig;
  std::vector<loss::LossBreakdown> losses;  // per client
  std::vector<double> mi;                   // per client, 0 when unused
  std::vector<double> weights;              // per client, 1 when unused
  exp::MetricsBundle metrics;
  std::vector<std::size_t> bytes_up;
  std::vector<std::size_t> bytes_down;

  double mean_ce() const;
  double mean_gan() const;
  double mean_mi() const;
  std::size_t total_up() const;
  std::size_t total_down() const;

  friend bool operator==(const RoundReport&, const RoundReport&) = default;
};

/// The simulated federation: clients, clusters and server state for one arm.
class Federation {
 public:
  // Called at named stages of a round; throwing from it aborts the round.
  using StageHook = std::function<void(std::string_view stage, std::size_t client)>;

  Federation(graph::FederationDataset data, ProtocolConfig cfg);

  /// Executes one round. On any error the state is restored to the start
  /// of the round and the error is rethrown.
  RoundReport run_round();
  std::vector<RoundReport> run();  // the remaining rounds of cfg.rounds

  const ProtocolConfig& config() const { return cfg_; }
  const graph::FederationDataset& dataset() const { return data_; }
  const ClusterAssignment& assignment() const { return assignment_; }
  const std::vector<ClientState>& clients() const { return state_.clients; }
  const std::vector<ClusterState>& clusters() const { return state_.clusters; }
  const model::DiscriminatorParams& global_discriminator() const { return state_.global; }
  std::size_t rounds_completed() const { return state_.round; }

  // Per-client argmax predictions and generated features on all nodes.
  std::vector<std::size_t> predictions(std::size_t client) const;
  num::Tensor embeddings(std::size_t client) const;
  exp::MetricsBundle evaluate() const;

  void set_stage_hook(StageHook hook) { hook_ = std::move(hook); }

 private:
  struct State {
    std::vector<ClientState> clients;
    std::vector<ClusterState> clusters;
    model::DiscriminatorParams global;
    std::size_t round = 0;
  };

  void run_graphfedmig_round(RoundReport& report);
  void run_fedavg_round(RoundReport& report);
  void stage(std::string_view name, std::size_t client) const;

  graph::FederationDataset data_;
  ProtocolConfig cfg_;
  model::ModelDims dims_;
  ClusterAssignment assignment_;
  std::size_t clustering_bytes_ = 0;  // per client, charged to round 0
  State state_;
  StageHook hook_;
};

/// Runs `mode` (local, fedavg or flhc) for cfg.rounds rounds.
std::vector<RoundReport> run_baseline(Arm mode, const graph::FederationDataset& data,
                                      ProtocolConfig cfg);

}  // namespace fedmig::fed
