#pragma once

// Small graphs and independent reference implementations used as test
// oracles. Nothing here calls into the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "riskprop/gat.hpp"
#include "riskprop/graph.hpp"
#include "riskprop/hgmae.hpp"
#include "riskprop/matrix.hpp"

namespace fixtures {

using riskprop::Matrix;
using riskprop::graph::Edge;
using riskprop::graph::HeteroGraph;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = d(rng);
  return m;
}

/// Random typed graph with every edge type non-empty.
inline HeteroGraph random_graph(std::size_t n, std::size_t types, double p, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<Edge>> edges(types);
  for (std::size_t k = 0; k < types; ++k) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (u(rng) < p) edges[k].push_back({a, b});
      }
    }
    if (edges[k].empty()) edges[k].push_back({k % n, (k + 1) % n});
  }
  std::vector<std::uint8_t> issuers(n);
  for (auto& f : issuers) f = u(rng) < 0.5 ? 1 : 0;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < types; ++k) names.push_back("type" + std::to_string(k));
  return HeteroGraph(random_matrix(n, dim, seed + 1), issuers, names, edges);
}

/// 12 nodes, two edge types, used for the end-to-end gradient checks.
inline HeteroGraph twelve_node_two_type_graph(std::size_t dim = 6) {
  std::vector<std::vector<Edge>> edges{
      {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {6, 7}, {8, 9}},
      {{0, 6}, {1, 7}, {2, 8}, {3, 9}, {4, 10}, {5, 11}, {10, 11}, {6, 9}, {7, 8}},
  };
  std::vector<std::uint8_t> issuers{1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  return HeteroGraph(random_matrix(12, dim, 77), issuers, {"parent-subsidiary", "share-investor"}, edges);
}

/// Dense boolean adjacency with self-loops, built straight from edge lists.
inline std::vector<std::vector<bool>> dense_adjacency(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = true;
  for (const auto& e : edges) {
    a[e.src][e.dst] = true;
    a[e.dst][e.src] = true;
  }
  return a;
}

/// Dense-matrix GAT layer written from the textbook definition.
inline Matrix dense_gat(const riskprop::nn::GatLayerParams& p, const Matrix& x,
                        const std::vector<std::vector<bool>>& adj) {
  const std::size_t n = x.rows();
  std::vector<Matrix> head_out;
  for (std::size_t h = 0; h < p.heads(); ++h) {
    const Matrix& W = p.weights[h];
    const Matrix& a = p.attention[h];
    const std::size_t d = W.rows();
    Matrix z(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t o = 0; o < d; ++o)
        for (std::size_t j = 0; j < x.cols(); ++j) z(i, o) += W(o, j) * x(i, j);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> e(n, -INFINITY);
      double mx = -INFINITY;
      for (std::size_t j = 0; j < n; ++j) {
        if (!adj[i][j]) continue;
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += a(0, c) * z(i, c) + a(0, d + c) * z(j, c);
        e[j] = s > 0 ? s : p.negative_slope * s;
        mx = std::max(mx, e[j]);
      }
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (adj[i][j]) denom += std::exp(e[j] - mx);
      for (std::size_t j = 0; j < n; ++j) {
        if (!adj[i][j]) continue;
        double alpha = std::exp(e[j] - mx) / denom;
        for (std::size_t c = 0; c < d; ++c) out(i, c) += alpha * z(j, c);
      }
    }
    head_out.push_back(out);
  }
  Matrix merged;
  if (p.merge == riskprop::nn::HeadMerge::concat) {
    const std::size_t d = head_out[0].cols();
    merged = Matrix(n, d * head_out.size());
    for (std::size_t h = 0; h < head_out.size(); ++h)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) merged(i, h * d + c) = head_out[h](i, c);
  } else {
    merged = Matrix(n, head_out[0].cols());
    for (const auto& m : head_out)
      for (std::size_t k = 0; k < m.size(); ++k) merged.values()[k] += m.values()[k] / head_out.size();
  }
  if (p.activation == riskprop::nn::Activation::elu) {
    for (double& v : merged.values()) v = v > 0 ? v : std::exp(v) - 1.0;
  }
  return merged;
}

inline Matrix dense_stack(const std::vector<riskprop::nn::GatLayerParams>& layers, Matrix x,
                          const std::vector<std::vector<bool>>& adj) {
  for (const auto& l : layers) x = dense_gat(l, x, adj);
  return x;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

/// Small model config so gradient checks stay fast.
inline riskprop::hgmae::TrainConfig small_train_config() {
  riskprop::hgmae::TrainConfig cfg;
  cfg.embed_dim = 5;
  cfg.encoder_heads = 2;
  cfg.encoder_head_dim = 3;
  cfg.epochs = 0;
  cfg.rng_seed = 11;
  return cfg;
}

/// Params with non-zero tokens so every tensor receives gradient signal.
inline riskprop::hgmae::ModelParams perturbed_params(std::size_t input_dim, const riskprop::hgmae::TrainConfig& cfg,
                                                     std::uint64_t seed) {
  auto p = riskprop::hgmae::init_params(input_dim, cfg);
  p.mask_token = random_matrix(1, input_dim, seed, 0.5);
  p.remask_token = random_matrix(1, cfg.embed_dim, seed + 1, 0.5);
  return p;
}

}  // namespace fixtures
