#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "riskprop/error.hpp"
#include "riskprop/matrix.hpp"

namespace riskprop::graph {

using NodeId = std::size_t;

/// Undirected edge in canonical form (src <= dst).
struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Symmetric neighbor lists with an implicit self-loop for every node.
/// Each row is sorted ascending and free of duplicates, which fixes the
/// reduction order of every aggregation that walks it.
class Adjacency {
 public:
  Adjacency() = default;
  static Adjacency from_edges(std::size_t num_nodes, std::span<const Edge> edges);
  static Adjacency from_edge_sets(std::size_t num_nodes, std::span<const std::vector<Edge>> edge_sets);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {targets_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  /// Number of (receiver, sender) entries including self-loops.
  std::size_t num_entries() const { return targets_.size(); }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
};

/// Typed-edge enterprise graph with a dense feature matrix and issuer flags.
/// Immutable after construction.
class HeteroGraph {
 public:
  HeteroGraph() = default;

  /// Canonicalizes (src <= dst), sorts and deduplicates each type's edges and
  /// validates every invariant. Throws riskprop::Error on violation.
  HeteroGraph(Matrix features, std::vector<std::uint8_t> issuer_flags,
              std::vector<std::string> edge_type_names, std::vector<std::vector<Edge>> edges_by_type);

  std::size_t num_nodes() const { return features_.rows(); }
  std::size_t feature_dim() const { return features_.cols(); }
  std::size_t num_edge_types() const { return edge_type_names_.size(); }
  std::size_t num_edges() const;

  const Matrix& features() const { return features_; }
  const std::vector<std::uint8_t>& issuer_flags() const { return issuer_flags_; }
  bool is_issuer(NodeId v) const { return issuer_flags_[v] != 0; }
  std::vector<NodeId> issuers() const;

  const std::vector<std::string>& edge_type_names() const { return edge_type_names_; }
  const std::vector<Edge>& edges(std::size_t type) const { return edges_[type]; }
  const std::vector<std::vector<Edge>>& edges_by_type() const { return edges_; }

  /// Union of all edge types, duplicate pairs collapsed.
  Adjacency full_adjacency() const;

  friend bool operator==(const HeteroGraph&, const HeteroGraph&) = default;

 private:
  Matrix features_;
  std::vector<std::uint8_t> issuer_flags_;
  std::vector<std::string> edge_type_names_;
  std::vector<std::vector<Edge>> edges_;
};

/// Single-edge-type view: the nodes incident to at least one edge of the
/// type, reindexed in ascending global-id order.
struct Subgraph {
  std::size_t edge_type = 0;
  std::vector<NodeId> parent_node_ids;
  Matrix features;
  std::vector<Edge> edges;

  std::size_t num_nodes() const { return parent_node_ids.size(); }
  Adjacency adjacency() const { return Adjacency::from_edges(num_nodes(), edges); }
};

class EmptySubgraphError : public Error {
 public:
  using Error::Error;
};

Subgraph extract_subgraph(const HeteroGraph& g, std::size_t edge_type);

/// Writes `nodes.tsv` and `edges.tsv`. Features use 17 significant digits,
/// so load_graph(save_graph(g)) == g.
void save_graph(const HeteroGraph& g, const std::filesystem::path& nodes_path,
                const std::filesystem::path& edges_path);
HeteroGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path);

/// Hop distances from `source` over `adj`, capped at `max_hops`; unreachable
/// nodes (or beyond the cap) get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const Adjacency& adj, NodeId source, std::size_t max_hops);

}  // namespace riskprop::graph
