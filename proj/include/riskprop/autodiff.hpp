#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "riskprop/graph.hpp"
#include "riskprop/matrix.hpp"

namespace riskprop::nn {

/// Reverse-mode tape over dense double matrices.
///
/// Every op evaluates eagerly, records a backward closure and checks its
/// output for NaN/Inf (NumericFault). `backward(root)` accumulates gradients
/// for every node in reverse creation order; leaves created with `variable`
/// expose them through `grad`. Ops that take an Adjacency keep a pointer to
/// it, so the adjacency must outlive the tape.
class Tape {
 public:
  struct Var {
    std::size_t id = 0;
  };

  Var constant(Matrix value);
  Var variable(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient of the last backward root w.r.t. `v` (zeros if unreached).
  /// Throws if backward() has not run.
  const Matrix& grad(Var v) const;
  double scalar(Var v) const;

  /// x [n x d_in] times weight [d_out x d_in] transposed.
  Var linear(Var x, Var weight);

  /// Single-head GAT aggregation. With s_i = a_l . z_i and t_j = a_r . z_j
  /// (attn = [a_l | a_r], shape 1 x 2d):
  ///   e_ij = LeakyReLU(s_i + t_j), alpha_ij = softmax over j in adj.neighbors(i),
  ///   out_i = sum_j alpha_ij z_j.
  /// Softmax subtracts the row max; neighbors are visited in ascending id order.
  Var attention(Var z, Var attn, const graph::Adjacency& adj, double negative_slope);

  Var concat_cols(std::span<const Var> parts);
  Var mean(std::span<const Var> parts);
  Var elu(Var x);

  /// Copy of x with the listed rows overwritten by token (shape 1 x cols).
  Var replace_rows(Var x, std::span<const std::size_t> rows, Var token);

  /// Mean over `rows` of (1 - cos(target_i, recon_i))^gamma, as a 1x1 node.
  /// Rows where either vector has zero norm count as cos = 0 with no gradient
  /// and increment zero_norm_rows().
  Var scaled_cosine_error(const Matrix& target, Var recon, std::span<const std::size_t> rows, double gamma);

  /// sum_i weights[i] * scalars[i] over 1x1 nodes.
  Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

  /// Sum of every entry, as a 1x1 node.
  Var sum(Var x);

  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  std::size_t zero_norm_rows() const { return zero_norm_rows_; }

 private:
  using Backprop = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Matrix value;
    Matrix grad;
    Backprop backprop;
  };

  Var push(Matrix value, Backprop backprop, const char* op);
  Matrix& grad_buffer(std::size_t id);

  std::vector<Node> nodes_;
  std::size_t zero_norm_rows_ = 0;
};

/// Plain evaluation of the scaled cosine error without a tape.
/// `zero_norm_rows` (optional) receives the count of degenerate rows.
double scaled_cosine_error(const Matrix& target, const Matrix& recon, std::span<const std::size_t> rows,
                           double gamma, std::size_t* zero_norm_rows = nullptr);

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

}  // namespace riskprop::nn
