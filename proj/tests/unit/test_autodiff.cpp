#include <doctest.h>

#include <cmath>
#include <numeric>

#include "riskprop/autodiff.hpp"
#include "riskprop/gat.hpp"
#include "riskprop/gradcheck.hpp"
#include "riskprop/optim.hpp"
#include "support/fixtures.hpp"

using namespace riskprop;
using graph::Adjacency;
using graph::Edge;
using nn::Activation;
using nn::GatLayerParams;
using nn::HeadMerge;
using nn::Tape;

namespace {

GatLayerParams random_layer(std::size_t in, std::size_t heads, std::size_t hd, HeadMerge merge, Activation act,
                            std::uint64_t seed) {
  auto rng = make_rng(seed, "test.layer");
  auto p = nn::init_gat_layer(in, heads, hd, merge, act, rng);
  // push attention into a regime where the softmax is far from uniform
  for (auto& a : p.attention)
    for (double& v : a.values()) v *= 3.0;
  return p;
}

std::vector<Matrix*> layer_tensors(GatLayerParams& p) {
  std::vector<Matrix*> out;
  for (std::size_t h = 0; h < p.heads(); ++h) {
    out.push_back(&p.weights[h]);
    out.push_back(&p.attention[h]);
  }
  return out;
}

}  // namespace

TEST_CASE("single isolated node reduces to ELU of its input") {
  GatLayerParams p;
  p.weights = {Matrix(3, 3)};
  for (std::size_t i = 0; i < 3; ++i) p.weights[0](i, i) = 1.0;
  p.attention = {Matrix(1, 6)};
  p.activation = Activation::elu;
  Matrix x(1, 3);
  x(0, 0) = 1.5;
  x(0, 1) = -0.7;
  x(0, 2) = 0.0;
  auto out = nn::gat_layer_forward(p, x, Adjacency::from_edges(1, {}));
  CHECK(out(0, 0) == 1.5);
  CHECK(out(0, 1) == std::expm1(-0.7));
  CHECK(out(0, 2) == 0.0);
}

TEST_CASE("isolated nodes are computed independently and equivariantly") {
  auto p = random_layer(4, 2, 3, HeadMerge::concat, Activation::elu, 4);
  auto x = fixtures::random_matrix(2, 4, 8);
  auto both = nn::gat_layer_forward(p, x, Adjacency::from_edges(2, {}));
  for (std::size_t v = 0; v < 2; ++v) {
    Matrix single(1, 4);
    std::copy(x.row(v).begin(), x.row(v).end(), single.row(0).begin());
    auto alone = nn::gat_layer_forward(p, single, Adjacency::from_edges(1, {}));
    for (std::size_t c = 0; c < both.cols(); ++c) CHECK(both(v, c) == alone(0, c));
  }
}

TEST_CASE("property: GAT output is permutation equivariant") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = fixtures::random_graph(9, 1, 0.3, 4, seed);
    auto p = random_layer(4, 3, 2, seed % 2 ? HeadMerge::concat : HeadMerge::mean, Activation::elu, seed);
    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(seed));
    Matrix px(9, 4);
    for (std::size_t v = 0; v < 9; ++v)
      for (std::size_t c = 0; c < 4; ++c) px(perm[v], c) = g.features()(v, c);
    std::vector<Edge> pedges;
    for (const auto& e : g.edges(0)) pedges.push_back({perm[e.src], perm[e.dst]});
    auto out = nn::gat_layer_forward(p, g.features(), Adjacency::from_edges(9, g.edges(0)));
    auto pout = nn::gat_layer_forward(p, px, Adjacency::from_edges(9, pedges));
    for (std::size_t v = 0; v < 9; ++v)
      for (std::size_t c = 0; c < out.cols(); ++c) CHECK(std::abs(pout(perm[v], c) - out(v, c)) < 1e-12);
  }
}

TEST_CASE("4-node path matches the dense reference") {
  std::vector<Edge> path{{0, 1}, {1, 2}, {2, 3}};
  auto x = fixtures::random_matrix(4, 5, 21);
  auto dense = fixtures::dense_adjacency(4, path);
  auto adj = Adjacency::from_edges(4, path);
  for (auto act : {Activation::elu, Activation::identity}) {
    auto p = random_layer(5, 1, 3, HeadMerge::concat, act, 31);
    CHECK(fixtures::max_abs_diff(nn::gat_layer_forward(p, x, adj), fixtures::dense_gat(p, x, dense)) < 1e-12);
  }
  for (auto merge : {HeadMerge::concat, HeadMerge::mean}) {
    auto p = random_layer(5, 4, 3, merge, Activation::elu, 41);
    CHECK(fixtures::max_abs_diff(nn::gat_layer_forward(p, x, adj), fixtures::dense_gat(p, x, dense)) < 1e-12);
  }
}

TEST_CASE("property: attention weights sum to one") {
  // A constant-ones column in z reads back sum_j alpha_ij.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = fixtures::random_graph(15, 1, 0.25, 3, seed);
    auto adj = Adjacency::from_edges(15, g.edges(0));
    Matrix z = fixtures::random_matrix(15, 3, seed, 4.0);
    for (std::size_t v = 0; v < 15; ++v) z(v, 2) = 1.0;
    Tape tape;
    auto out = tape.attention(tape.constant(z), tape.constant(fixtures::random_matrix(1, 6, seed + 9, 3.0)), adj, 0.2);
    for (std::size_t v = 0; v < 15; ++v) CHECK(std::abs(tape.value(out)(v, 2) - 1.0) <= 1e-12);
  }
}

TEST_CASE("property: removing an edge only affects nodes within its receptive field") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    auto g = fixtures::random_graph(30, 1, 0.06, 3, seed);
    auto edges = g.edges(0);
    const Edge removed = edges[seed % edges.size()];
    std::vector<Edge> fewer;
    for (const auto& e : edges)
      if (!(e == removed)) fewer.push_back(e);
    std::vector<GatLayerParams> stack{random_layer(3, 2, 4, HeadMerge::concat, Activation::elu, seed),
                                      random_layer(8, 1, 3, HeadMerge::concat, Activation::elu, seed + 50)};
    auto run = [&](const std::vector<Edge>& es) {
      auto adj = Adjacency::from_edges(30, es);
      Matrix h = g.features();
      for (const auto& l : stack) h = nn::gat_layer_forward(l, h, adj);
      return h;
    };
    auto before = run(edges);
    auto after = run(fewer);
    auto adj = Adjacency::from_edges(30, edges);
    auto du = graph::bfs_distances(adj, removed.src, 30);
    auto dv = graph::bfs_distances(adj, removed.dst, 30);
    for (std::size_t i = 0; i < 30; ++i) {
      bool reachable = std::min(du[i], dv[i]) <= stack.size() - 1;
      auto a = before.row(i);
      auto b = after.row(i);
      bool same = std::equal(a.begin(), a.end(), b.begin());
      if (!reachable) CHECK(same);
    }
    CHECK_FALSE(std::equal(before.row(removed.src).begin(), before.row(removed.src).end(),
                           after.row(removed.src).begin()));
  }
}

TEST_CASE("SCE of a reconstruction equal to its target has zero gradient") {
  auto x = fixtures::random_matrix(6, 4, 2);
  Tape tape;
  auto z = tape.variable(x);
  std::vector<std::size_t> rows{0, 2, 3, 5};
  auto loss = tape.scaled_cosine_error(x, z, rows, 2.0);
  tape.backward(loss);
  CHECK(std::abs(tape.scalar(loss)) < 1e-15);
  for (double g : tape.grad(z).values()) CHECK(std::abs(g) < 1e-15);
}

TEST_CASE("gradient of summed linear output is the column sums of the input") {
  auto xv = fixtures::random_matrix(5, 3, 6);
  auto wv = fixtures::random_matrix(4, 3, 7);
  Tape tape;
  auto x = tape.variable(xv);
  auto w = tape.variable(wv);
  tape.backward(tape.sum(tape.linear(x, w)));
  for (std::size_t o = 0; o < 4; ++o) {
    for (std::size_t j = 0; j < 3; ++j) {
      double col = 0.0;
      for (std::size_t r = 0; r < 5; ++r) col += xv(r, j);
      CHECK(tape.grad(w)(o, j) == doctest::Approx(col).epsilon(1e-14));
    }
  }
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t j = 0; j < 3; ++j) {
      double col = 0.0;
      for (std::size_t o = 0; o < 4; ++o) col += wv(o, j);
      CHECK(tape.grad(x)(r, j) == doctest::Approx(col).epsilon(1e-14));
    }
  }
}

TEST_CASE("grad before backward is an error") {
  Tape tape;
  auto v = tape.variable(Matrix(1, 1, 2.0));
  CHECK_THROWS_AS(tape.grad(v), Error);
}

TEST_CASE("non-finite intermediate raises NumericFault") {
  Tape tape;
  auto x = tape.constant(Matrix(1, 2, 1e308));
  auto w = tape.variable(Matrix(1, 2, 10.0));
  CHECK_THROWS_AS(tape.linear(x, w), NumericFault);
}

TEST_CASE("zero-norm rows count as maximal error with no gradient") {
  Matrix x(2, 2);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  Matrix zv(2, 2);
  zv(1, 1) = 3.0;
  Tape tape;
  auto z = tape.variable(zv);
  std::vector<std::size_t> rows{0, 1};
  auto loss = tape.scaled_cosine_error(x, z, rows, 1.0);
  tape.backward(loss);
  CHECK(tape.scalar(loss) == 0.5);
  CHECK(tape.zero_norm_rows() == 1);
  for (double g : tape.grad(z).values()) CHECK(g == 0.0);
}

TEST_CASE("GAT layer gradients pass finite differences for every default configuration") {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 5}};
  auto adj = Adjacency::from_edges(6, edges);
  auto x = fixtures::random_matrix(6, 4, 3);
  auto target = fixtures::random_matrix(6, 5, 4);
  std::vector<std::size_t> rows{0, 1, 3, 4};
  struct Shape {
    std::size_t heads, hd;
    HeadMerge merge;
    Activation act;
    std::size_t out;
  };
  for (Shape s : {Shape{4, 2, HeadMerge::concat, Activation::elu, 8}, Shape{1, 5, HeadMerge::concat, Activation::elu, 5},
                  Shape{1, 5, HeadMerge::concat, Activation::identity, 5},
                  Shape{2, 5, HeadMerge::mean, Activation::elu, 5}}) {
    auto p = random_layer(4, s.heads, s.hd, s.merge, s.act, 17);
    Matrix proj = fixtures::random_matrix(5, s.out, 9);
    auto forward = [&](bool grads, std::vector<Matrix>* out) {
      Tape tape;
      auto vars = nn::bind_gat_layer(tape, p);
      auto h = nn::gat_forward(tape, p, vars, tape.constant(x), adj);
      auto recon = tape.linear(h, tape.constant(proj));
      auto loss = tape.scaled_cosine_error(target, recon, rows, 2.0);
      if (grads) {
        tape.backward(loss);
        for (std::size_t i = 0; i < p.heads(); ++i) {
          out->push_back(tape.grad(vars.weights[i]));
          out->push_back(tape.grad(vars.attention[i]));
        }
      }
      return tape.scalar(loss);
    };
    std::vector<Matrix> analytic;
    forward(true, &analytic);
    auto params = layer_tensors(p);
    auto report = nn::grad_check([&] { return forward(false, nullptr); }, params, analytic);
    CHECK_MESSAGE(report.passed, "max rel error " << report.max_rel_error);
  }
}

TEST_CASE("Adam leaves parameters alone under zero gradient") {
  auto p = fixtures::random_matrix(3, 3, 1);
  auto before = p;
  nn::AdamState adam;
  std::vector<Matrix*> ps{&p};
  std::vector<Matrix> gs{Matrix(3, 3)};
  for (int i = 0; i < 5; ++i) adam.step(ps, gs);
  CHECK(p == before);
}

TEST_CASE("Adam first step matches the bias-corrected closed form") {
  nn::AdamConfig cfg;
  cfg.lr = 0.01;
  auto p = fixtures::random_matrix(2, 4, 3);
  auto g = fixtures::random_matrix(2, 4, 4, 1e-3);
  g(0, 0) = 0.0;
  auto start = p;
  nn::AdamState adam(cfg);
  std::vector<Matrix*> ps{&p};
  std::vector<Matrix> gs{g};
  adam.step(ps, gs);
  for (std::size_t k = 0; k < p.size(); ++k) {
    double gk = g.values()[k];
    double m_hat = ((1.0 - cfg.beta1) * gk) / (1.0 - cfg.beta1);
    double v_hat = ((1.0 - cfg.beta2) * gk * gk) / (1.0 - cfg.beta2);
    double expected = start.values()[k] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    CHECK(p.values()[k] == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(adam.steps() == 1);
}

TEST_CASE("Adam is deterministic") {
  auto run = [] {
    auto p = fixtures::random_matrix(3, 2, 5);
    nn::AdamState adam;
    std::vector<Matrix*> ps{&p};
    for (std::uint64_t t = 0; t < 20; ++t) {
      std::vector<Matrix> gs{fixtures::random_matrix(3, 2, 100 + t)};
      adam.step(ps, gs);
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("grad_check is exact on a quadratic") {
  Matrix a = fixtures::random_matrix(2, 3, 1);
  Matrix b = fixtures::random_matrix(1, 4, 2);
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (k + 1.0) * a.values()[k] * a.values()[k];
    for (std::size_t k = 0; k < b.size(); ++k) s += 0.5 * b.values()[k] * b.values()[k];
    return s + a(0, 0) * b(0, 1);
  };
  Matrix ga(2, 3), gb(1, 4);
  for (std::size_t k = 0; k < a.size(); ++k) ga.values()[k] = 2.0 * (k + 1.0) * a.values()[k];
  for (std::size_t k = 0; k < b.size(); ++k) gb.values()[k] = b.values()[k];
  ga(0, 0) += b(0, 1);
  gb(0, 1) += a(0, 0);
  std::vector<Matrix*> params{&a, &b};
  std::vector<Matrix> analytic{ga, gb};
  const Matrix a0 = a, b0 = b;
  auto report = nn::grad_check(loss, params, analytic);
  CHECK(report.max_rel_error < 1e-9);
  CHECK(report.passed);
  CHECK(report.entries.size() == 10);
  CHECK(a == a0);
  CHECK(b == b0);

  auto again = nn::grad_check(loss, params, analytic);
  REQUIRE(again.entries.size() == report.entries.size());
  for (std::size_t i = 0; i < again.entries.size(); ++i) {
    CHECK(again.entries[i].numeric == report.entries[i].numeric);
    CHECK(again.entries[i].rel_error == report.entries[i].rel_error);
  }
  CHECK(again.max_rel_error == report.max_rel_error);
}

TEST_CASE("grad_check flags a wrong gradient") {
  Matrix a(1, 2, 1.0);
  std::vector<Matrix*> params{&a};
  std::vector<Matrix> wrong{Matrix(1, 2, 5.0)};
  auto report = nn::grad_check([&] { return a(0, 0) * a(0, 0) + a(0, 1); }, params, wrong);
  CHECK_FALSE(report.passed);
}

TEST_CASE("subsampled grad_check agrees with the full check on shared coordinates") {
  auto p = random_layer(4, 3, 3, HeadMerge::concat, Activation::elu, 23);
  std::vector<Edge> edges{{0, 1}, {1, 2}, {2, 3}, {0, 3}};
  auto adj = Adjacency::from_edges(4, edges);
  auto x = fixtures::random_matrix(4, 4, 5);
  auto forward = [&](std::vector<Matrix>* out) {
    Tape tape;
    auto vars = nn::bind_gat_layer(tape, p);
    auto h = nn::gat_forward(tape, p, vars, tape.constant(x), adj);
    auto loss = tape.sum(tape.elu(h));
    if (out) {
      tape.backward(loss);
      for (std::size_t i = 0; i < p.heads(); ++i) {
        out->push_back(tape.grad(vars.weights[i]));
        out->push_back(tape.grad(vars.attention[i]));
      }
    }
    return tape.scalar(loss);
  };
  std::vector<Matrix> analytic;
  forward(&analytic);
  auto params = layer_tensors(p);
  auto full = nn::grad_check([&] { return forward(nullptr); }, params, analytic);
  nn::GradCheckOptions opts;
  opts.subsample = 20;
  opts.subsample_seed = 99;
  auto sub = nn::grad_check([&] { return forward(nullptr); }, params, analytic, opts);
  CHECK(sub.entries.size() == 20);
  CHECK(full.passed);
  CHECK(sub.passed);
  for (const auto& e : sub.entries) {
    auto it = std::find_if(full.entries.begin(), full.entries.end(),
                           [&](const nn::GradCheckEntry& f) { return f.tensor == e.tensor && f.index == e.index; });
    REQUIRE(it != full.entries.end());
    CHECK(it->numeric == e.numeric);
    CHECK(it->analytic == e.analytic);
  }
}
