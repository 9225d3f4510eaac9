#include "riskprop/gat.hpp"

#include <cmath>

#include "riskprop/error.hpp"

namespace riskprop::nn {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace

GatLayerParams init_gat_layer(std::size_t in_dim, std::size_t heads, std::size_t head_dim, HeadMerge merge,
                              Activation activation, Rng& rng, double negative_slope) {
  if (in_dim == 0 || heads == 0 || head_dim == 0) throw Error("GAT layer dimensions must be positive");
  GatLayerParams p;
  p.negative_slope = negative_slope;
  p.merge = merge;
  p.activation = activation;
  for (std::size_t h = 0; h < heads; ++h) {
    p.weights.push_back(uniform_matrix(head_dim, in_dim, in_dim, rng));
    p.attention.push_back(uniform_matrix(1, 2 * head_dim, 2 * head_dim, rng));
  }
  return p;
}

GatLayerVars bind_gat_layer(Tape& tape, const GatLayerParams& params) {
  GatLayerVars vars;
  for (const auto& w : params.weights) vars.weights.push_back(tape.variable(w));
  for (const auto& a : params.attention) vars.attention.push_back(tape.variable(a));
  return vars;
}

Tape::Var gat_forward(Tape& tape, const GatLayerParams& params, const GatLayerVars& vars, Tape::Var x,
                      const graph::Adjacency& adj) {
  if (params.heads() == 0) throw Error("GAT layer has no heads");
  std::vector<Tape::Var> heads;
  heads.reserve(params.heads());
  for (std::size_t h = 0; h < params.heads(); ++h) {
    auto z = tape.linear(x, vars.weights[h]);
    heads.push_back(tape.attention(z, vars.attention[h], adj, params.negative_slope));
  }
  Tape::Var merged = heads[0];
  if (heads.size() > 1) {
    merged = params.merge == HeadMerge::concat ? tape.concat_cols(heads) : tape.mean(heads);
  }
  return params.activation == Activation::elu ? tape.elu(merged) : merged;
}

Matrix gat_layer_forward(const GatLayerParams& params, const Matrix& x, const graph::Adjacency& adj) {
  Tape tape;
  auto vars = bind_gat_layer(tape, params);
  auto out = gat_forward(tape, params, vars, tape.constant(x), adj);
  return tape.value(out);
}

}  // namespace riskprop::nn
