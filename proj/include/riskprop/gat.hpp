#pragma once

#include <string>
#include <vector>

#include "riskprop/autodiff.hpp"
#include "riskprop/graph.hpp"
#include "riskprop/matrix.hpp"
#include "riskprop/rng.hpp"

namespace riskprop::nn {

enum class HeadMerge { concat, mean };
enum class Activation { identity, elu };

/// One multi-head GAT layer. Head h owns weight [head_dim x in_dim] and
/// attention vector [1 x 2*head_dim].
struct GatLayerParams {
  std::vector<Matrix> weights;
  std::vector<Matrix> attention;
  double negative_slope = 0.2;
  HeadMerge merge = HeadMerge::concat;
  Activation activation = Activation::elu;

  std::size_t heads() const { return weights.size(); }
  std::size_t in_dim() const { return weights.empty() ? 0 : weights[0].cols(); }
  std::size_t head_dim() const { return weights.empty() ? 0 : weights[0].rows(); }
  std::size_t out_dim() const { return merge == HeadMerge::concat ? heads() * head_dim() : head_dim(); }

  friend bool operator==(const GatLayerParams&, const GatLayerParams&) = default;
};

/// Weights and attention vectors ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
GatLayerParams init_gat_layer(std::size_t in_dim, std::size_t heads, std::size_t head_dim, HeadMerge merge,
                              Activation activation, Rng& rng, double negative_slope = 0.2);

/// Tape handles for one layer's tensors.
struct GatLayerVars {
  std::vector<Tape::Var> weights;
  std::vector<Tape::Var> attention;
};

GatLayerVars bind_gat_layer(Tape& tape, const GatLayerParams& params);

/// Self-loops come from the Adjacency (every row contains its own node).
Tape::Var gat_forward(Tape& tape, const GatLayerParams& params, const GatLayerVars& vars, Tape::Var x,
                      const graph::Adjacency& adj);

/// Forward-only convenience wrapper.
Matrix gat_layer_forward(const GatLayerParams& params, const Matrix& x, const graph::Adjacency& adj);

}  // namespace riskprop::nn
