#pragma once

// Second implementations of quantities the library computes, used to check it.

#include <map>
#include <vector>

#include "riskprop/graph.hpp"
#include "riskprop/hgmae.hpp"
#include "riskprop/pairs.hpp"
#include "riskprop/synthgen.hpp"

namespace oracles {

using riskprop::Matrix;
using riskprop::pairs::Label;
using riskprop::pairs::PropagationPair;

/// All-pairs hop distances by Floyd-Warshall over the union of edge types.
inline std::vector<std::vector<std::size_t>> all_pairs_hops(const riskprop::graph::HeteroGraph& g) {
  const std::size_t n = g.num_nodes();
  const std::size_t inf = n + 1;
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (std::size_t v = 0; v < n; ++v) d[v][v] = 0;
  for (const auto& list : g.edges_by_type())
    for (const auto& e : list) d[e.src][e.dst] = d[e.dst][e.src] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// Join of every (defaulted issuer, other issuer) within max_hops with the
/// strict later-default rule, in (source, target) order.
inline std::vector<PropagationPair> brute_force_pairs(const riskprop::graph::HeteroGraph& g,
                                                      const std::vector<riskprop::synth::DefaultEvent>& events,
                                                      std::size_t max_hops) {
  auto d = all_pairs_hops(g);
  std::map<riskprop::graph::NodeId, std::uint64_t> when;
  for (const auto& e : events) when[e.node_id] = e.default_time;
  std::vector<PropagationPair> out;
  for (riskprop::graph::NodeId s = 0; s < g.num_nodes(); ++s) {
    if (!g.is_issuer(s) || !when.count(s)) continue;
    for (riskprop::graph::NodeId t = 0; t < g.num_nodes(); ++t) {
      if (t == s || !g.is_issuer(t) || d[s][t] > max_hops) continue;
      bool black = when.count(t) && when[t] > when[s];
      out.push_back({s, t, black ? Label::black : Label::white, d[s][t]});
    }
  }
  return out;
}

/// Pairwise ranking AUC: a positive beating a negative counts 1, a tie 1/2.
inline double exhaustive_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] == 1) ++pos;
    else ++neg;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / (pos * neg);
}

/// Reconstruction loss of one graph, assembled from the forward-only pieces.
inline double part_loss(const Matrix& x, const riskprop::graph::Adjacency& adj, const riskprop::hgmae::MaskPlan& plan,
                        const riskprop::hgmae::ModelParams& params, double gamma) {
  auto corrupted = riskprop::hgmae::apply_mask(x, plan, params);
  auto latent = riskprop::hgmae::encode(adj, corrupted, params);
  auto recon = riskprop::hgmae::remask_and_decode(latent, plan, params, adj);
  return riskprop::hgmae::sce_loss(x, recon, plan.masked_ids, gamma);
}

}  // namespace oracles
