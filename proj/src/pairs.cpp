#include "riskprop/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "riskprop/error.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::pairs {

std::vector<PropagationPair> enumerate_pairs(const HeteroGraph& g, std::span<const DefaultEvent> events,
                                             std::size_t max_hops) {
  if (max_hops < 1) throw Error("pair expansion needs at least one hop");
  std::vector<std::optional<std::uint64_t>> default_time(g.num_nodes());
  for (const auto& ev : events) {
    if (ev.node_id >= g.num_nodes()) throw Error("event references node " + std::to_string(ev.node_id) + " outside the graph");
    default_time[ev.node_id] = ev.default_time;
  }
  const auto adj = g.full_adjacency();
  std::vector<PropagationPair> out;
  bool any_source = false;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (!g.is_issuer(s) || !default_time[s]) continue;
    any_source = true;
    const auto dist = graph::bfs_distances(adj, s, max_hops);
    for (NodeId t = 0; t < g.num_nodes(); ++t) {
      if (t == s || !g.is_issuer(t) || dist[t] > max_hops) continue;
      const bool black = default_time[t] && *default_time[t] > *default_time[s];
      out.push_back({s, t, black ? Label::black : Label::white, dist[t]});
    }
  }
  if (!any_source) throw Error("no defaulted issuers to use as sources");
  return out;
}

std::vector<PropagationPair> balance_pairs(std::span<const PropagationPair> pairs, Rng& rng) {
  std::vector<PropagationPair> black, white;
  for (const auto& p : pairs) (p.label == Label::black ? black : white).push_back(p);
  std::vector<PropagationPair> kept_white;
  std::sample(white.begin(), white.end(), std::back_inserter(kept_white), std::min(white.size(), black.size()), rng);
  std::vector<PropagationPair> out = std::move(black);
  out.insert(out.end(), kept_white.begin(), kept_white.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PropagationPair> build_pairs(const HeteroGraph& g, std::span<const DefaultEvent> events,
                                         std::size_t max_hops, Rng& rng) {
  auto all = enumerate_pairs(g, events, max_hops);
  if (std::none_of(all.begin(), all.end(), [](const auto& p) { return p.label == Label::black; })) {
    throw Error("no positive samples; adjust cascade config");
  }
  return balance_pairs(all, rng);
}

PairDatasetSplit split(std::span<const PropagationPair> pairs, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error("train fraction must lie in (0,1)");
  std::vector<PropagationPair> black, white;
  for (const auto& p : pairs) (p.label == Label::black ? black : white).push_back(p);
  if (black.size() < 5 || white.size() < 5) {
    throw Error("class too small to split: " + std::to_string(black.size()) + " black, " +
                std::to_string(white.size()) + " white (need >= 5 each)");
  }
  Rng rng(seed);
  PairDatasetSplit s;
  s.split_seed = seed;
  for (auto* cls : {&black, &white}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(cls->size())));
    s.train.insert(s.train.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.insert(s.test.end(), cls->begin() + static_cast<std::ptrdiff_t>(n_train), cls->end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void save_pairs(const PairDatasetSplit& s, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "source_id\ttarget_id\thop\tlabel\tsplit\n";
  auto rows = [&](const std::vector<PropagationPair>& list, const char* tag) {
    for (const auto& p : list) {
      out << p.source << '\t' << p.target << '\t' << p.hop_distance << '\t' << static_cast<int>(p.label) << '\t' << tag
          << '\n';
    }
  };
  rows(s.train, "train");
  rows(s.test, "test");
  io::write_file_atomic(path, out.str());
}

PairDatasetSplit load_pairs(const std::filesystem::path& path) {
  io::LineReader in(path);
  std::string line;
  if (!in.next(line) || line != "source_id\ttarget_id\thop\tlabel\tsplit") {
    in.fail("expected header 'source_id<TAB>target_id<TAB>hop<TAB>label<TAB>split'");
  }
  PairDatasetSplit s;
  while (in.next(line)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != 5) in.fail("expected 5 columns");
    PropagationPair p;
    p.source = io::parse_uint(cols[0], path, in.line_number());
    p.target = io::parse_uint(cols[1], path, in.line_number());
    p.hop_distance = io::parse_uint(cols[2], path, in.line_number());
    auto label = io::parse_uint(cols[3], path, in.line_number());
    if (label > 1) in.fail("label must be 0 or 1");
    p.label = static_cast<Label>(label);
    if (cols[4] == "train") s.train.push_back(p);
    else if (cols[4] == "test") s.test.push_back(p);
    else in.fail("split must be 'train' or 'test'");
  }
  return s;
}

}  // namespace riskprop::pairs
