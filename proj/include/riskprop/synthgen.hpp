#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "riskprop/graph.hpp"
#include "riskprop/matrix.hpp"

namespace riskprop::synth {

using graph::HeteroGraph;
using graph::NodeId;

/// Parameters of the synthetic enterprise graph, its issuer population and
/// the planted default cascade. Per-type vectors have one entry per edge type.
struct GenConfig {
  std::size_t num_nodes = 200;
  std::size_t num_communities = 3;
  std::size_t num_edge_types = 3;
  std::size_t feature_dim = 16;
  std::size_t task_dim = 4;
  double issuer_fraction = 0.5;
  std::vector<std::string> edge_type_names{"parent-subsidiary", "share-investor", "share-manager"};
  std::vector<double> intra_community_edge_prob{0.02, 0.08, 0.05};
  std::vector<double> inter_community_edge_prob{0.002, 0.01, 0.005};
  std::vector<double> transmission_prob{0.6, 0.1, 0.15};
  std::size_t num_seed_defaults = 3;
  std::size_t max_cascade_hops = 4;
  double noise_std = 0.5;
  /// Weight of the susceptibility signal in issuer task features.
  double task_signal_weight = 1.0;
  std::uint64_t rng_seed = 1;

  /// Throws ConfigError listing every offending field.
  void validate() const;
};

std::string to_config_text(const GenConfig& cfg, std::string_view prefix = "");
/// Applies one `key=value` assignment (key without prefix). Returns false for unknown keys.
bool apply_config_value(GenConfig& cfg, std::string_view key, std::string_view value);
GenConfig load_gen_config(const std::filesystem::path& path);
void save_gen_config(const GenConfig& cfg, const std::filesystem::path& path);

struct DefaultEvent {
  NodeId node_id = 0;
  std::uint64_t default_time = 0;
  friend auto operator<=>(const DefaultEvent&, const DefaultEvent&) = default;
};

/// Community label per node, drawn from its own stream of `rng_seed`.
std::vector<std::size_t> community_assignment(const GenConfig& cfg);

/// Per-community feature signature: 1 on dims j with j % C == c, else 0.
std::vector<double> community_signature(const GenConfig& cfg, std::size_t community);

HeteroGraph generate_graph(const GenConfig& cfg);

/// One uniform draw per directed transmission attempt:
/// per_type[k][i] = {src->dst, dst->src} for edge i of type k.
struct TransmissionDraws {
  std::vector<std::vector<std::array<double, 2>>> per_type;
};

std::vector<NodeId> select_seed_defaults(const HeteroGraph& g, const GenConfig& cfg);
TransmissionDraws draw_transmissions(const HeteroGraph& g, const GenConfig& cfg);

/// Tick-by-tick independent cascade driven by pre-drawn uniforms. An attempt
/// across a type-k edge succeeds iff its uniform is < transmission_prob[k].
std::vector<DefaultEvent> propagate_cascade(const HeteroGraph& g, std::span<const NodeId> seeds,
                                            const TransmissionDraws& draws,
                                            std::span<const double> transmission_prob, std::size_t max_hops);

/// Events sorted by (time, node_id); seeds are exactly the tick-0 events.
std::vector<DefaultEvent> simulate_cascade(const HeteroGraph& g, const GenConfig& cfg);

/// Issuer-only task features X^t, rows aligned with `node_ids` (ascending).
struct TaskFeatures {
  std::vector<NodeId> node_ids;
  Matrix values;

  /// Row index for `node`; throws if the node has no task features.
  std::size_t row_of(NodeId node) const;
  friend bool operator==(const TaskFeatures&, const TaskFeatures&) = default;
};

/// Structural exposure 1 - prod_k (1 - p_k)^deg_k(v): the chance v defaults
/// if every neighbor defaults.
std::vector<double> cascade_susceptibility(const HeteroGraph& g, std::span<const double> transmission_prob);

/// Dim 0 = task_signal_weight * susceptibility + noise, remaining dims noise.
TaskFeatures attach_task_features(const HeteroGraph& g, std::span<const DefaultEvent> events, const GenConfig& cfg);

void save_events(std::span<const DefaultEvent> events, const std::filesystem::path& path);
std::vector<DefaultEvent> load_events(const std::filesystem::path& path, std::size_t num_nodes);

void save_task_features(const TaskFeatures& tf, const std::filesystem::path& path);
TaskFeatures load_task_features(const std::filesystem::path& path);

}  // namespace riskprop::synth
