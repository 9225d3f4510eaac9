#include "riskprop/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "riskprop/config_values.hpp"
#include "riskprop/error.hpp"
#include "riskprop/rng.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::synth {

void GenConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  auto check_probs = [&](const std::vector<double>& v, const char* name) {
    check(v.size() == num_edge_types, std::string(name) + " needs " + std::to_string(num_edge_types) +
                                          " entries, has " + std::to_string(v.size()));
    for (double p : v) check(p >= 0.0 && p <= 1.0, std::string(name) + " entries must lie in [0,1]");
  };
  check(num_nodes >= 2, "num_nodes must be >= 2");
  check(num_communities >= 1, "num_communities must be >= 1");
  check(num_communities <= num_nodes, "num_communities must not exceed num_nodes");
  check(num_edge_types >= 1, "num_edge_types must be >= 1");
  check(feature_dim >= num_communities, "feature_dim must be >= num_communities");
  check(task_dim >= 1, "task_dim must be >= 1");
  check(issuer_fraction > 0.0 && issuer_fraction <= 1.0, "issuer_fraction must lie in (0,1]");
  check(edge_type_names.size() == num_edge_types, "edge_type_names needs " + std::to_string(num_edge_types) + " entries");
  for (const auto& name : edge_type_names) {
    check(!name.empty() && name.find_first_of("\t\n,") == std::string::npos,
          "edge type names must be non-empty without tabs, commas or newlines");
  }
  std::vector<std::string> sorted = edge_type_names;
  std::sort(sorted.begin(), sorted.end());
  check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "edge_type_names must be distinct");
  check_probs(intra_community_edge_prob, "intra_community_edge_prob");
  check_probs(inter_community_edge_prob, "inter_community_edge_prob");
  check_probs(transmission_prob, "transmission_prob");
  check(num_seed_defaults >= 1, "num_seed_defaults must be >= 1");
  check(std::isfinite(noise_std) && noise_std >= 0.0, "noise_std must be >= 0");
  check(std::isfinite(task_signal_weight), "task_signal_weight must be finite");
  if (!problems.empty()) {
    std::string msg = "invalid generator config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

std::string to_config_text(const GenConfig& cfg, std::string_view prefix) {
  using config::join;
  std::ostringstream out;
  auto line = [&](const char* key, const std::string& value) { out << prefix << key << '=' << value << '\n'; };
  line("num_nodes", std::to_string(cfg.num_nodes));
  line("num_communities", std::to_string(cfg.num_communities));
  line("num_edge_types", std::to_string(cfg.num_edge_types));
  line("feature_dim", std::to_string(cfg.feature_dim));
  line("task_dim", std::to_string(cfg.task_dim));
  line("issuer_fraction", io::format_double(cfg.issuer_fraction));
  line("edge_type_names", join(cfg.edge_type_names));
  line("intra_community_edge_prob", join(cfg.intra_community_edge_prob));
  line("inter_community_edge_prob", join(cfg.inter_community_edge_prob));
  line("transmission_prob", join(cfg.transmission_prob));
  line("num_seed_defaults", std::to_string(cfg.num_seed_defaults));
  line("max_cascade_hops", std::to_string(cfg.max_cascade_hops));
  line("noise_std", io::format_double(cfg.noise_std));
  line("task_signal_weight", io::format_double(cfg.task_signal_weight));
  line("rng_seed", std::to_string(cfg.rng_seed));
  return out.str();
}

bool apply_config_value(GenConfig& cfg, std::string_view key, std::string_view value) {
  using namespace config;
  if (key == "num_nodes") cfg.num_nodes = to_size(value, key);
  else if (key == "num_communities") cfg.num_communities = to_size(value, key);
  else if (key == "num_edge_types") cfg.num_edge_types = to_size(value, key);
  else if (key == "feature_dim") cfg.feature_dim = to_size(value, key);
  else if (key == "task_dim") cfg.task_dim = to_size(value, key);
  else if (key == "issuer_fraction") cfg.issuer_fraction = to_double(value, key);
  else if (key == "edge_type_names") cfg.edge_type_names = to_strings(value);
  else if (key == "intra_community_edge_prob") cfg.intra_community_edge_prob = to_doubles(value, key);
  else if (key == "inter_community_edge_prob") cfg.inter_community_edge_prob = to_doubles(value, key);
  else if (key == "transmission_prob") cfg.transmission_prob = to_doubles(value, key);
  else if (key == "num_seed_defaults") cfg.num_seed_defaults = to_size(value, key);
  else if (key == "max_cascade_hops") cfg.max_cascade_hops = to_size(value, key);
  else if (key == "noise_std") cfg.noise_std = to_double(value, key);
  else if (key == "task_signal_weight") cfg.task_signal_weight = to_double(value, key);
  else if (key == "rng_seed") cfg.rng_seed = to_u64(value, key);
  else return false;
  return true;
}

GenConfig load_gen_config(const std::filesystem::path& path) {
  GenConfig cfg;
  for (const auto& kv : io::parse_key_values(path)) {
    if (!apply_config_value(cfg, kv.key, kv.value)) {
      throw ConfigError(path.string() + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void save_gen_config(const GenConfig& cfg, const std::filesystem::path& path) {
  io::write_file_atomic(path, to_config_text(cfg));
}

std::vector<std::size_t> community_assignment(const GenConfig& cfg) {
  auto rng = make_rng(cfg.rng_seed, "synth.communities");
  std::uniform_int_distribution<std::size_t> pick(0, cfg.num_communities - 1);
  std::vector<std::size_t> community(cfg.num_nodes);
  for (auto& c : community) c = pick(rng);
  return community;
}

std::vector<double> community_signature(const GenConfig& cfg, std::size_t community) {
  std::vector<double> sig(cfg.feature_dim, 0.0);
  for (std::size_t j = community; j < cfg.feature_dim; j += cfg.num_communities) sig[j] = 1.0;
  return sig;
}

HeteroGraph generate_graph(const GenConfig& cfg) {
  cfg.validate();
  const auto community = community_assignment(cfg);
  const std::size_t n = cfg.num_nodes;

  Matrix features(n, cfg.feature_dim);
  {
    auto rng = make_rng(cfg.rng_seed, "synth.features");
    std::normal_distribution<double> noise(0.0, 1.0);
    for (NodeId v = 0; v < n; ++v) {
      auto sig = community_signature(cfg, community[v]);
      auto row = features.row(v);
      for (std::size_t j = 0; j < cfg.feature_dim; ++j) row[j] = sig[j] + cfg.noise_std * noise(rng);
    }
  }

  std::vector<std::uint8_t> issuers(n);
  {
    auto rng = make_rng(cfg.rng_seed, "synth.issuers");
    std::bernoulli_distribution coin(cfg.issuer_fraction);
    for (auto& f : issuers) f = coin(rng) ? 1 : 0;
  }

  std::vector<std::vector<graph::Edge>> edges(cfg.num_edge_types);
  for (std::size_t k = 0; k < cfg.num_edge_types; ++k) {
    auto rng = make_rng(cfg.rng_seed, "synth.edges." + std::to_string(k));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        double p = community[u] == community[v] ? cfg.intra_community_edge_prob[k] : cfg.inter_community_edge_prob[k];
        if (unit(rng) < p) edges[k].push_back({u, v});
      }
    }
  }
  return HeteroGraph(std::move(features), std::move(issuers), cfg.edge_type_names, std::move(edges));
}

std::vector<NodeId> select_seed_defaults(const HeteroGraph& g, const GenConfig& cfg) {
  auto issuers = g.issuers();
  if (issuers.size() < cfg.num_seed_defaults) {
    throw Error("cannot seed " + std::to_string(cfg.num_seed_defaults) + " defaults: graph has only " +
                std::to_string(issuers.size()) + " issuers");
  }
  auto rng = make_rng(cfg.rng_seed, "synth.seeds");
  std::vector<NodeId> seeds;
  std::sample(issuers.begin(), issuers.end(), std::back_inserter(seeds), cfg.num_seed_defaults, rng);
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

TransmissionDraws draw_transmissions(const HeteroGraph& g, const GenConfig& cfg) {
  auto rng = make_rng(cfg.rng_seed, "synth.transmission");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TransmissionDraws draws;
  draws.per_type.resize(g.num_edge_types());
  for (std::size_t k = 0; k < g.num_edge_types(); ++k) {
    draws.per_type[k].resize(g.edges(k).size());
    for (auto& pair : draws.per_type[k]) {
      pair[0] = unit(rng);
      pair[1] = unit(rng);
    }
  }
  return draws;
}

std::vector<DefaultEvent> propagate_cascade(const HeteroGraph& g, std::span<const NodeId> seeds,
                                            const TransmissionDraws& draws,
                                            std::span<const double> transmission_prob, std::size_t max_hops) {
  if (transmission_prob.size() != g.num_edge_types() || draws.per_type.size() != g.num_edge_types()) {
    throw Error("transmission inputs do not match the graph's edge types");
  }
  // Incident directed attempts per node: (receiver, type, uniform).
  struct Attempt {
    NodeId to;
    std::size_t type;
    double uniform;
  };
  std::vector<std::vector<Attempt>> outgoing(g.num_nodes());
  for (std::size_t k = 0; k < g.num_edge_types(); ++k) {
    const auto& edges = g.edges(k);
    if (draws.per_type[k].size() != edges.size()) throw Error("transmission draws do not match edge count");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      outgoing[edges[i].src].push_back({edges[i].dst, k, draws.per_type[k][i][0]});
      outgoing[edges[i].dst].push_back({edges[i].src, k, draws.per_type[k][i][1]});
    }
  }

  constexpr auto kHealthy = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> time(g.num_nodes(), kHealthy);
  std::vector<NodeId> frontier;
  for (NodeId s : seeds) {
    if (s >= g.num_nodes()) throw Error("seed node " + std::to_string(s) + " out of range");
    if (time[s] == kHealthy) {
      time[s] = 0;
      frontier.push_back(s);
    }
  }
  std::sort(frontier.begin(), frontier.end());
  for (std::uint64_t tick = 0; tick < max_hops && !frontier.empty(); ++tick) {
    std::vector<NodeId> next;
    for (NodeId u : frontier) {
      for (const Attempt& a : outgoing[u]) {
        if (time[a.to] != kHealthy) continue;
        if (a.uniform < transmission_prob[a.type]) {
          time[a.to] = tick + 1;
          next.push_back(a.to);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }

  std::vector<DefaultEvent> events;
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    if (time[v] != kHealthy) events.push_back({v, time[v]});
  }
  std::sort(events.begin(), events.end(), [](const DefaultEvent& a, const DefaultEvent& b) {
    return std::tie(a.default_time, a.node_id) < std::tie(b.default_time, b.node_id);
  });
  return events;
}

std::vector<DefaultEvent> simulate_cascade(const HeteroGraph& g, const GenConfig& cfg) {
  cfg.validate();
  auto seeds = select_seed_defaults(g, cfg);
  auto draws = draw_transmissions(g, cfg);
  return propagate_cascade(g, seeds, draws, cfg.transmission_prob, cfg.max_cascade_hops);
}

std::size_t TaskFeatures::row_of(NodeId node) const {
  auto it = std::lower_bound(node_ids.begin(), node_ids.end(), node);
  if (it == node_ids.end() || *it != node) {
    throw Error("no task features for node " + std::to_string(node));
  }
  return static_cast<std::size_t>(it - node_ids.begin());
}

std::vector<double> cascade_susceptibility(const HeteroGraph& g, std::span<const double> transmission_prob) {
  if (transmission_prob.size() != g.num_edge_types()) throw Error("transmission_prob size mismatch");
  std::vector<double> log_survive(g.num_nodes(), 0.0);
  for (std::size_t k = 0; k < g.num_edge_types(); ++k) {
    double l = std::log1p(-std::min(transmission_prob[k], 1.0 - 1e-12));
    for (const auto& e : g.edges(k)) {
      log_survive[e.src] += l;
      log_survive[e.dst] += l;
    }
  }
  std::vector<double> out(g.num_nodes());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = -std::expm1(log_survive[v]);
  return out;
}

TaskFeatures attach_task_features(const HeteroGraph& g, std::span<const DefaultEvent> events, const GenConfig& cfg) {
  cfg.validate();
  for (const auto& ev : events) {
    if (ev.node_id >= g.num_nodes()) throw Error("event references node " + std::to_string(ev.node_id) + " outside the graph");
  }
  const auto susceptibility = cascade_susceptibility(g, cfg.transmission_prob);
  TaskFeatures tf;
  tf.node_ids = g.issuers();
  tf.values = Matrix(tf.node_ids.size(), cfg.task_dim);
  auto rng = make_rng(cfg.rng_seed, "synth.task_features");
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < tf.node_ids.size(); ++i) {
    auto row = tf.values.row(i);
    for (std::size_t j = 0; j < cfg.task_dim; ++j) {
      double signal = j == 0 ? cfg.task_signal_weight * susceptibility[tf.node_ids[i]] : 0.0;
      row[j] = signal + cfg.noise_std * noise(rng);
    }
  }
  return tf;
}

void save_events(std::span<const DefaultEvent> events, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "node_id\tdefault_time\n";
  for (const auto& ev : events) out << ev.node_id << '\t' << ev.default_time << '\n';
  io::write_file_atomic(path, out.str());
}

std::vector<DefaultEvent> load_events(const std::filesystem::path& path, std::size_t num_nodes) {
  io::LineReader in(path);
  std::string line;
  if (!in.next(line) || line != "node_id\tdefault_time") in.fail("expected header 'node_id<TAB>default_time'");
  std::vector<DefaultEvent> events;
  std::vector<std::uint8_t> seen(num_nodes, 0);
  while (in.next(line)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != 2) in.fail("expected 2 columns");
    DefaultEvent ev{io::parse_uint(cols[0], path, in.line_number()), io::parse_uint(cols[1], path, in.line_number())};
    if (ev.node_id >= num_nodes) in.fail("dangling node id " + std::to_string(ev.node_id));
    if (seen[ev.node_id]) in.fail("second event for node " + std::to_string(ev.node_id));
    seen[ev.node_id] = 1;
    events.push_back(ev);
  }
  return events;
}

void save_task_features(const TaskFeatures& tf, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "node_id";
  for (std::size_t j = 0; j < tf.values.cols(); ++j) out << "\tt" << j;
  out << '\n';
  for (std::size_t i = 0; i < tf.node_ids.size(); ++i) {
    out << tf.node_ids[i];
    for (double v : tf.values.row(i)) out << '\t' << io::format_double(v);
    out << '\n';
  }
  io::write_file_atomic(path, out.str());
}

TaskFeatures load_task_features(const std::filesystem::path& path) {
  io::LineReader in(path);
  std::string line;
  if (!in.next(line)) in.fail("missing header");
  auto header = io::split(line, '\t');
  if (header.empty() || header[0] != "node_id") in.fail("expected header 'node_id<TAB>t0..'");
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 1] != "t" + std::to_string(j)) in.fail("expected column t" + std::to_string(j));
  }
  TaskFeatures tf;
  std::vector<double> values;
  while (in.next(line)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != dim + 1) in.fail("expected " + std::to_string(dim + 1) + " columns");
    auto id = io::parse_uint(cols[0], path, in.line_number());
    if (!tf.node_ids.empty() && id <= tf.node_ids.back()) in.fail("node ids must be strictly ascending");
    tf.node_ids.push_back(id);
    for (std::size_t j = 0; j < dim; ++j) values.push_back(io::parse_double(cols[j + 1], path, in.line_number()));
  }
  tf.values = Matrix(tf.node_ids.size(), dim);
  std::copy(values.begin(), values.end(), tf.values.values().begin());
  return tf;
}

}  // namespace riskprop::synth
