#include "riskprop/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "riskprop/error.hpp"

namespace riskprop::nn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

struct CosineTerm {
  double cos = 0.0;
  double norm_x = 0.0;
  double norm_z = 0.0;
  bool degenerate = false;
};

CosineTerm cosine_term(std::span<const double> x, std::span<const double> z) {
  double dot = 0.0, xx = 0.0, zz = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    dot += x[j] * z[j];
    xx += x[j] * x[j];
    zz += z[j] * z[j];
  }
  CosineTerm t;
  t.norm_x = std::sqrt(xx);
  t.norm_z = std::sqrt(zz);
  if (t.norm_x == 0.0 || t.norm_z == 0.0) {
    t.degenerate = true;
    return t;
  }
  t.cos = dot / (t.norm_x * t.norm_z);
  return t;
}

void check_rows(const Matrix& target, const Matrix& recon, std::span<const std::size_t> rows) {
  require(target.same_shape(recon), "scaled cosine error: target and reconstruction shapes differ");
  require(!rows.empty(), "scaled cosine error: empty row set");
  for (auto r : rows) require(r < target.rows(), "scaled cosine error: row index out of range");
}

}  // namespace

double scaled_cosine_error(const Matrix& target, const Matrix& recon, std::span<const std::size_t> rows,
                           double gamma, std::size_t* zero_norm_rows) {
  check_rows(target, recon, rows);
  double total = 0.0;
  std::size_t degenerate = 0;
  for (auto r : rows) {
    auto t = cosine_term(target.row(r), recon.row(r));
    if (t.degenerate) ++degenerate;
    total += std::pow(std::max(0.0, 1.0 - t.cos), gamma);
  }
  if (zero_norm_rows) *zero_norm_rows = degenerate;
  return total / static_cast<double>(rows.size());
}

Tape::Var Tape::push(Matrix value, Backprop backprop, const char* op) {
  if (!all_finite(value)) throw NumericFault(std::string("non-finite output in ") + op);
  nodes_.push_back(Node{std::move(value), Matrix{}, std::move(backprop)});
  return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_buffer(std::size_t id) { return nodes_[id].grad; }

const Matrix& Tape::grad(Var v) const {
  require(v.id < nodes_.size(), "grad(): unknown node");
  const Node& n = nodes_[v.id];
  require(n.grad.same_shape(n.value), "grad(): call backward() first");
  return n.grad;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  require(m.rows() == 1 && m.cols() == 1, "scalar(): node is not 1x1");
  return m(0, 0);
}

Tape::Var Tape::constant(Matrix value) { return push(std::move(value), nullptr, "constant"); }
Tape::Var Tape::variable(Matrix value) { return push(std::move(value), nullptr, "variable"); }

Tape::Var Tape::linear(Var x, Var weight) {
  const Matrix& X = value(x);
  const Matrix& W = value(weight);
  require(X.cols() == W.cols(), "linear: input dim " + std::to_string(X.cols()) + " vs weight dim " +
                                    std::to_string(W.cols()));
  Matrix out(X.rows(), W.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    auto xi = X.row(i);
    for (std::size_t o = 0; o < W.rows(); ++o) {
      auto wo = W.row(o);
      double acc = 0.0;
      for (std::size_t j = 0; j < xi.size(); ++j) acc += xi[j] * wo[j];
      out(i, o) = acc;
    }
  }
  return push(std::move(out), [x, weight](Tape& t, std::size_t self) {
    const Matrix& G = t.nodes_[self].grad;
    const Matrix& X = t.value(x);
    const Matrix& W = t.value(weight);
    Matrix& gx = t.grad_buffer(x.id);
    Matrix& gw = t.grad_buffer(weight.id);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      for (std::size_t o = 0; o < W.rows(); ++o) {
        double g = G(i, o);
        if (g == 0.0) continue;
        for (std::size_t j = 0; j < X.cols(); ++j) {
          gx(i, j) += g * W(o, j);
          gw(o, j) += g * X(i, j);
        }
      }
    }
  }, "linear");
}

Tape::Var Tape::attention(Var z, Var attn, const graph::Adjacency& adj, double negative_slope) {
  const Matrix& Z = value(z);
  const Matrix& A = value(attn);
  const std::size_t n = Z.rows();
  const std::size_t d = Z.cols();
  require(adj.num_nodes() == n, "attention: adjacency has " + std::to_string(adj.num_nodes()) + " nodes, input has " +
                                    std::to_string(n));
  require(A.rows() == 1 && A.cols() == 2 * d, "attention: vector must be 1 x 2d");

  std::vector<double> s(n, 0.0), t(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      s[i] += A(0, j) * Z(i, j);
      t[i] += A(0, d + j) * Z(i, j);
    }
  }
  // Per adjacency entry: pre-activation score and attention weight.
  auto pre = std::make_shared<std::vector<double>>(adj.num_entries());
  auto alpha = std::make_shared<std::vector<double>>(adj.num_entries());
  Matrix out(n, d);
  std::size_t entry = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto nbrs = adj.neighbors(i);
    const std::size_t base = entry;
    double max_e = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      double p = s[i] + t[nbrs[k]];
      (*pre)[base + k] = p;
      max_e = std::max(max_e, leaky_relu(p, negative_slope));
    }
    double denom = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      double w = std::exp(leaky_relu((*pre)[base + k], negative_slope) - max_e);
      (*alpha)[base + k] = w;
      denom += w;
    }
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      double a = (*alpha)[base + k] / denom;
      (*alpha)[base + k] = a;
      auto zj = Z.row(nbrs[k]);
      for (std::size_t c = 0; c < d; ++c) out(i, c) += a * zj[c];
    }
    entry += nbrs.size();
  }

  const graph::Adjacency* adj_ptr = &adj;
  return push(std::move(out), [z, attn, adj_ptr, pre, alpha, negative_slope](Tape& tp, std::size_t self) {
    const Matrix& G = tp.nodes_[self].grad;
    const Matrix& Z = tp.value(z);
    const Matrix& A = tp.value(attn);
    const std::size_t n = Z.rows();
    const std::size_t d = Z.cols();
    Matrix& gz = tp.grad_buffer(z.id);
    Matrix& ga = tp.grad_buffer(attn.id);
    std::vector<double> ds(n, 0.0), dt(n, 0.0);
    std::vector<double> dalpha;
    std::size_t entry = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto nbrs = adj_ptr->neighbors(i);
      auto gi = G.row(i);
      dalpha.assign(nbrs.size(), 0.0);
      double weighted = 0.0;
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const double a = (*alpha)[entry + k];
        auto zj = Z.row(nbrs[k]);
        auto gzj = gz.row(nbrs[k]);
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          gzj[c] += a * gi[c];
          dot += gi[c] * zj[c];
        }
        dalpha[k] = dot;
        weighted += a * dot;
      }
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const double a = (*alpha)[entry + k];
        const double de = a * (dalpha[k] - weighted);
        const double dp = (*pre)[entry + k] > 0.0 ? de : negative_slope * de;
        ds[i] += dp;
        dt[nbrs[k]] += dp;
      }
      entry += nbrs.size();
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto zi = Z.row(i);
      auto gzi = gz.row(i);
      for (std::size_t c = 0; c < d; ++c) {
        gzi[c] += A(0, c) * ds[i] + A(0, d + c) * dt[i];
        ga(0, c) += ds[i] * zi[c];
        ga(0, d + c) += dt[i] * zi[c];
      }
    }
  }, "attention");
}

Tape::Var Tape::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t n = value(parts[0]).rows();
  std::size_t total = 0;
  for (Var p : parts) {
    require(value(p).rows() == n, "concat_cols: row counts differ");
    total += value(p).cols();
  }
  Matrix out(n, total);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& m = value(p);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(m.row(i).begin(), m.row(i).end(), out.row(i).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += m.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), [inputs](Tape& t, std::size_t self) {
    const Matrix& G = t.nodes_[self].grad;
    std::size_t offset = 0;
    for (Var p : inputs) {
      Matrix& gp = t.grad_buffer(p.id);
      for (std::size_t i = 0; i < gp.rows(); ++i) {
        for (std::size_t c = 0; c < gp.cols(); ++c) gp(i, c) += G(i, offset + c);
      }
      offset += gp.cols();
    }
  }, "concat_cols");
}

Tape::Var Tape::mean(std::span<const Var> parts) {
  require(!parts.empty(), "mean: no inputs");
  Matrix out(value(parts[0]).rows(), value(parts[0]).cols());
  for (Var p : parts) {
    require(value(p).same_shape(out), "mean: shapes differ");
    auto src = value(p).values();
    auto dst = out.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  const double scale = 1.0 / static_cast<double>(parts.size());
  for (double& v : out.values()) v *= scale;
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), [inputs, scale](Tape& t, std::size_t self) {
    for (Var p : inputs) {
      auto g = t.nodes_[self].grad.values();
      auto gp = t.grad_buffer(p.id).values();
      for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += scale * g[k];
    }
  }, "mean");
}

Tape::Var Tape::elu(Var x) {
  Matrix out = value(x);
  for (double& v : out.values()) v = nn::elu(v);
  return push(std::move(out), [x](Tape& t, std::size_t self) {
    auto g = t.nodes_[self].grad.values();
    auto in = t.value(x).values();
    auto gx = t.grad_buffer(x.id).values();
    for (std::size_t k = 0; k < gx.size(); ++k) gx[k] += g[k] * (in[k] > 0.0 ? 1.0 : std::exp(in[k]));
  }, "elu");
}

Tape::Var Tape::replace_rows(Var x, std::span<const std::size_t> rows, Var token) {
  Matrix out = value(x);
  const Matrix& tok = value(token);
  require(tok.rows() == 1 && tok.cols() == out.cols(), "replace_rows: token must be 1 x " + std::to_string(out.cols()));
  std::vector<std::uint8_t> replaced(out.rows(), 0);
  for (auto r : rows) {
    require(r < out.rows(), "replace_rows: row index out of range");
    replaced[r] = 1;
    std::copy(tok.row(0).begin(), tok.row(0).end(), out.row(r).begin());
  }
  return push(std::move(out), [x, token, replaced = std::move(replaced)](Tape& t, std::size_t self) {
    const Matrix& G = t.nodes_[self].grad;
    Matrix& gx = t.grad_buffer(x.id);
    Matrix& gt = t.grad_buffer(token.id);
    for (std::size_t i = 0; i < G.rows(); ++i) {
      auto gi = G.row(i);
      auto dst = replaced[i] ? gt.row(0) : gx.row(i);
      for (std::size_t c = 0; c < gi.size(); ++c) dst[c] += gi[c];
    }
  }, "replace_rows");
}

Tape::Var Tape::scaled_cosine_error(const Matrix& target, Var recon, std::span<const std::size_t> rows, double gamma) {
  std::size_t degenerate = 0;
  const double loss = nn::scaled_cosine_error(target, value(recon), rows, gamma, &degenerate);
  zero_norm_rows_ += degenerate;
  Matrix out(1, 1, loss);
  std::vector<std::size_t> row_list(rows.begin(), rows.end());
  return push(std::move(out), [target, recon, row_list = std::move(row_list), gamma](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad(0, 0);
    const Matrix& Z = t.value(recon);
    Matrix& gz = t.grad_buffer(recon.id);
    const double inv_m = 1.0 / static_cast<double>(row_list.size());
    for (auto r : row_list) {
      auto x = target.row(r);
      auto z = Z.row(r);
      auto term = cosine_term(x, z);
      if (term.degenerate) continue;
      const double gap = std::max(0.0, 1.0 - term.cos);
      // d/dcos of gap^gamma
      const double outer = gamma == 1.0 ? -1.0 : -gamma * std::pow(gap, gamma - 1.0);
      const double scale = g * inv_m * outer;
      const double inv_xz = 1.0 / (term.norm_x * term.norm_z);
      const double cos_over_zz = term.cos / (term.norm_z * term.norm_z);
      auto gr = gz.row(r);
      for (std::size_t c = 0; c < z.size(); ++c) gr[c] += scale * (x[c] * inv_xz - cos_over_zz * z[c]);
    }
  }, "scaled_cosine_error");
}

Tape::Var Tape::weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
  require(scalars.size() == weights.size(), "weighted_sum: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) total += weights[i] * scalar(scalars[i]);
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  std::vector<double> w(weights.begin(), weights.end());
  return push(Matrix(1, 1, total), [inputs, w](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad(0, 0);
    for (std::size_t i = 0; i < inputs.size(); ++i) t.grad_buffer(inputs[i].id)(0, 0) += w[i] * g;
  }, "weighted_sum");
}

Tape::Var Tape::sum(Var x) {
  double total = 0.0;
  for (double v : value(x).values()) total += v;
  return push(Matrix(1, 1, total), [x](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad(0, 0);
    for (double& v : t.grad_buffer(x.id).values()) v += g;
  }, "sum");
}

void Tape::backward(Var root) {
  require(root.id < nodes_.size(), "backward: unknown root");
  require(value(root).rows() == 1 && value(root).cols() == 1, "backward: root must be a 1x1 scalar");
  for (auto& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
  nodes_[root.id].grad(0, 0) = 1.0;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backprop) continue;
    n.backprop(*this, id);
  }
  for (std::size_t id = 0; id <= root.id; ++id) {
    if (!all_finite(nodes_[id].grad)) {
      throw NumericFault("non-finite gradient at tape node " + std::to_string(id));
    }
  }
}

}  // namespace riskprop::nn
