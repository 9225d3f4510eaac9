#include "riskprop/graph.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "riskprop/text_io.hpp"

namespace riskprop::graph {

Adjacency Adjacency::from_edges(std::size_t num_nodes, std::span<const Edge> edges) {
  std::vector<std::vector<Edge>> one{std::vector<Edge>(edges.begin(), edges.end())};
  return from_edge_sets(num_nodes, one);
}

Adjacency Adjacency::from_edge_sets(std::size_t num_nodes, std::span<const std::vector<Edge>> edge_sets) {
  std::vector<std::vector<NodeId>> lists(num_nodes);
  for (NodeId v = 0; v < num_nodes; ++v) lists[v].push_back(v);
  for (const auto& set : edge_sets) {
    for (const Edge& e : set) {
      if (e.src >= num_nodes || e.dst >= num_nodes) {
        throw Error("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                    ") out of range for " + std::to_string(num_nodes) + " nodes");
      }
      lists[e.src].push_back(e.dst);
      lists[e.dst].push_back(e.src);
    }
  }
  Adjacency adj;
  adj.offsets_.reserve(num_nodes + 1);
  adj.offsets_.push_back(0);
  for (auto& l : lists) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
    adj.targets_.insert(adj.targets_.end(), l.begin(), l.end());
    adj.offsets_.push_back(adj.targets_.size());
  }
  return adj;
}

HeteroGraph::HeteroGraph(Matrix features, std::vector<std::uint8_t> issuer_flags,
                         std::vector<std::string> edge_type_names,
                         std::vector<std::vector<Edge>> edges_by_type)
    : features_(std::move(features)),
      issuer_flags_(std::move(issuer_flags)),
      edge_type_names_(std::move(edge_type_names)),
      edges_(std::move(edges_by_type)) {
  const std::size_t n = features_.rows();
  if (issuer_flags_.size() != n) {
    throw Error("issuer flag count " + std::to_string(issuer_flags_.size()) + " does not match " +
                std::to_string(n) + " nodes");
  }
  if (edge_type_names_.empty()) throw Error("graph needs at least one edge type");
  if (edges_.size() != edge_type_names_.size()) {
    throw Error("edge list count does not match edge type name count");
  }
  if (!all_finite(features_)) throw Error("node features contain non-finite values");
  for (auto& flag : issuer_flags_) flag = flag ? 1 : 0;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    auto& list = edges_[k];
    for (Edge& e : list) {
      if (e.src >= n || e.dst >= n) {
        throw Error("dangling node id " + std::to_string(std::max(e.src, e.dst)) + " in edge type '" +
                    edge_type_names_[k] + "'");
      }
      if (e.src == e.dst) {
        throw Error("self-loop on node " + std::to_string(e.src) + " in edge type '" + edge_type_names_[k] +
                    "'; self-loops are implicit");
      }
      if (e.src > e.dst) std::swap(e.src, e.dst);
    }
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

std::size_t HeteroGraph::num_edges() const {
  std::size_t total = 0;
  for (const auto& l : edges_) total += l.size();
  return total;
}

std::vector<NodeId> HeteroGraph::issuers() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v) {
    if (is_issuer(v)) out.push_back(v);
  }
  return out;
}

Adjacency HeteroGraph::full_adjacency() const { return Adjacency::from_edge_sets(num_nodes(), edges_); }

Subgraph extract_subgraph(const HeteroGraph& g, std::size_t edge_type) {
  if (edge_type >= g.num_edge_types()) {
    throw Error("edge type " + std::to_string(edge_type) + " out of range (K=" +
                std::to_string(g.num_edge_types()) + ")");
  }
  const auto& edges = g.edges(edge_type);
  if (edges.empty()) {
    throw EmptySubgraphError("empty subgraph: edge type '" + g.edge_type_names()[edge_type] + "' has no edges");
  }
  std::vector<std::size_t> local(g.num_nodes(), std::numeric_limits<std::size_t>::max());
  for (const Edge& e : edges) {
    local[e.src] = 0;
    local[e.dst] = 0;
  }
  Subgraph sub;
  sub.edge_type = edge_type;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (local[v] == 0) {
      local[v] = sub.parent_node_ids.size();
      sub.parent_node_ids.push_back(v);
    }
  }
  sub.features = Matrix(sub.parent_node_ids.size(), g.feature_dim());
  for (std::size_t i = 0; i < sub.parent_node_ids.size(); ++i) {
    auto src = g.features().row(sub.parent_node_ids[i]);
    std::copy(src.begin(), src.end(), sub.features.row(i).begin());
  }
  sub.edges.reserve(edges.size());
  for (const Edge& e : edges) sub.edges.push_back({local[e.src], local[e.dst]});
  return sub;
}

std::vector<std::size_t> bfs_distances(const Adjacency& adj, NodeId source, std::size_t max_hops) {
  constexpr auto kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(adj.num_nodes(), kUnreached);
  std::queue<NodeId> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop();
    if (dist[v] == max_hops) continue;
    for (NodeId u : adj.neighbors(v)) {
      if (dist[u] == kUnreached) {
        dist[u] = dist[v] + 1;
        frontier.push(u);
      }
    }
  }
  return dist;
}

// nodes.tsv: node_id, is_issuer, f0..f{d-1}
// edges.tsv: optional "#edge_types" declaration line (keeps types that have no
// edges and fixes id order), then header edge_type/src/dst.

void save_graph(const HeteroGraph& g, const std::filesystem::path& nodes_path,
                const std::filesystem::path& edges_path) {
  std::ostringstream nodes;
  nodes << "node_id\tis_issuer";
  for (std::size_t j = 0; j < g.feature_dim(); ++j) nodes << "\tf" << j;
  nodes << '\n';
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    nodes << v << '\t' << (g.is_issuer(v) ? 1 : 0);
    for (double x : g.features().row(v)) nodes << '\t' << io::format_double(x);
    nodes << '\n';
  }
  std::ostringstream edges;
  edges << "#edge_types";
  for (const auto& name : g.edge_type_names()) edges << '\t' << name;
  edges << "\nedge_type\tsrc\tdst\n";
  for (std::size_t k = 0; k < g.num_edge_types(); ++k) {
    for (const Edge& e : g.edges(k)) edges << g.edge_type_names()[k] << '\t' << e.src << '\t' << e.dst << '\n';
  }
  io::write_file_atomic(nodes_path, nodes.str());
  io::write_file_atomic(edges_path, edges.str());
}

HeteroGraph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path) {
  io::LineReader nodes(nodes_path);
  std::string line;
  if (!nodes.next(line)) nodes.fail("missing header");
  auto header = io::split(line, '\t');
  if (header.size() < 2 || header[0] != "node_id" || header[1] != "is_issuer") {
    nodes.fail("expected header 'node_id<TAB>is_issuer<TAB>f0..'");
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 2] != "f" + std::to_string(j)) nodes.fail("expected feature column f" + std::to_string(j));
  }
  std::vector<double> values;
  std::vector<std::uint8_t> flags;
  while (nodes.next(line)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != dim + 2) {
      nodes.fail("expected " + std::to_string(dim + 2) + " columns, got " + std::to_string(cols.size()));
    }
    auto id = io::parse_uint(cols[0], nodes_path, nodes.line_number());
    if (id != flags.size()) nodes.fail("node ids must be dense and ascending; expected " + std::to_string(flags.size()));
    auto flag = io::parse_uint(cols[1], nodes_path, nodes.line_number());
    if (flag > 1) nodes.fail("is_issuer must be 0 or 1");
    flags.push_back(static_cast<std::uint8_t>(flag));
    for (std::size_t j = 0; j < dim; ++j) values.push_back(io::parse_double(cols[j + 2], nodes_path, nodes.line_number()));
  }
  const std::size_t n = flags.size();
  Matrix features(n, dim);
  std::copy(values.begin(), values.end(), features.values().begin());

  io::LineReader edges(edges_path);
  std::vector<std::string> names;
  std::map<std::string, std::size_t, std::less<>> type_ids;
  std::vector<std::vector<Edge>> lists;
  auto type_id = [&](std::string_view name) {
    auto it = type_ids.find(name);
    if (it != type_ids.end()) return it->second;
    std::size_t id = names.size();
    names.emplace_back(name);
    type_ids.emplace(std::string(name), id);
    lists.emplace_back();
    return id;
  };
  bool have_header = false;
  while (edges.next(line)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (!have_header) {
      if (cols[0] == "#edge_types") {
        for (std::size_t i = 1; i < cols.size(); ++i) {
          if (cols[i].empty()) edges.fail("empty edge type name");
          if (type_ids.count(cols[i])) edges.fail("duplicate edge type '" + std::string(cols[i]) + "'");
          type_id(cols[i]);
        }
        continue;
      }
      if (cols.size() != 3 || cols[0] != "edge_type" || cols[1] != "src" || cols[2] != "dst") {
        edges.fail("expected header 'edge_type<TAB>src<TAB>dst'");
      }
      have_header = true;
      continue;
    }
    if (cols.size() != 3) edges.fail("expected 3 columns, got " + std::to_string(cols.size()));
    if (cols[0].empty()) edges.fail("empty edge type name");
    auto src = io::parse_uint(cols[1], edges_path, edges.line_number());
    auto dst = io::parse_uint(cols[2], edges_path, edges.line_number());
    for (auto id : {src, dst}) {
      if (id >= n) edges.fail("dangling node id " + std::to_string(id) + " (graph has " + std::to_string(n) + " nodes)");
    }
    if (src == dst) edges.fail("self-loop on node " + std::to_string(src));
    lists[type_id(cols[0])].push_back({src, dst});
  }
  if (!have_header) edges.fail("missing header");
  if (names.empty()) edges.fail("no edge types declared and no edges present");
  return HeteroGraph(std::move(features), std::move(flags), std::move(names), std::move(lists));
}

}  // namespace riskprop::graph
