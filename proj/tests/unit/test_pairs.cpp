#include <doctest.h>

#include <filesystem>
#include <set>

#include "riskprop/pairs.hpp"
#include "riskprop/synthgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace riskprop;
using pairs::Label;
using pairs::PropagationPair;
using synth::DefaultEvent;

namespace {

std::size_t count(const std::vector<PropagationPair>& ps, Label l) {
  return static_cast<std::size_t>(std::count_if(ps.begin(), ps.end(), [&](const auto& p) { return p.label == l; }));
}

std::vector<PropagationPair> synthetic_pairs(std::size_t black, std::size_t white) {
  std::vector<PropagationPair> out;
  for (std::size_t i = 0; i < black + white; ++i) out.push_back({i, i + 1000, i < black ? Label::black : Label::white, 1});
  return out;
}

}  // namespace

TEST_CASE("later default of a neighboring issuer is a black pair") {
  graph::HeteroGraph g(Matrix(2, 1), {1, 1}, {"a"}, {{{0, 1}}});
  std::vector<DefaultEvent> events{{0, 0}, {1, 2}};
  auto ps = pairs::enumerate_pairs(g, events, 3);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0] == PropagationPair{0, 1, Label::black, 1});
  CHECK(ps[1] == PropagationPair{1, 0, Label::white, 1});
  CHECK(count(ps, Label::black) == 1);
}

TEST_CASE("same-tick defaults are white") {
  graph::HeteroGraph g(Matrix(3, 1), {1, 1, 0}, {"a"}, {{{0, 2}, {1, 2}}});
  std::vector<DefaultEvent> events{{0, 1}, {1, 1}};
  auto ps = pairs::enumerate_pairs(g, events, 3);
  REQUIRE(ps.size() == 2);
  for (const auto& p : ps) {
    CHECK(p.label == Label::white);
    CHECK(p.hop_distance == 2);
  }
}

TEST_CASE("non-issuers are neither sources nor targets") {
  graph::HeteroGraph g(Matrix(3, 1), {1, 0, 1}, {"a"}, {{{0, 1}, {1, 2}}});
  std::vector<DefaultEvent> events{{1, 0}, {0, 1}, {2, 2}};
  auto ps = pairs::enumerate_pairs(g, events, 3);
  REQUIRE(ps.size() == 2);
  CHECK(ps[0] == PropagationPair{0, 2, Label::black, 2});
  CHECK(ps[1] == PropagationPair{2, 0, Label::white, 2});
}

TEST_CASE("enumeration matches a brute-force join on synthetic graphs") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    synth::GenConfig cfg;
    cfg.rng_seed = seed;
    cfg.num_nodes = 100 + 25 * (seed % 9);
    auto g = synth::generate_graph(cfg);
    auto events = synth::simulate_cascade(g, cfg);
    for (std::size_t hops : {1, 2, 3}) CHECK(pairs::enumerate_pairs(g, events, hops) == oracles::brute_force_pairs(g, events, hops));
  }
}

TEST_CASE("default config pairs balance to equal classes") {
  synth::GenConfig cfg;
  auto g = synth::generate_graph(cfg);
  auto events = synth::simulate_cascade(g, cfg);
  auto all = pairs::enumerate_pairs(g, events, 3);
  auto expected = oracles::brute_force_pairs(g, events, 3);
  CHECK(count(all, Label::black) == count(expected, Label::black));
  CHECK(count(all, Label::white) == count(expected, Label::white));
  Rng rng(1);
  auto balanced = pairs::build_pairs(g, events, 3, rng);
  CHECK(count(balanced, Label::black) == count(balanced, Label::white));
  CHECK(count(balanced, Label::black) == count(all, Label::black));
}

TEST_CASE("property: balancing keeps every black pair and only drops white ones") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    synth::GenConfig cfg;
    cfg.rng_seed = seed;
    auto g = synth::generate_graph(cfg);
    auto events = synth::simulate_cascade(g, cfg);
    auto all = pairs::enumerate_pairs(g, events, 3);
    Rng rng(seed);
    auto balanced = pairs::balance_pairs(all, rng);
    CHECK(std::is_sorted(balanced.begin(), balanced.end()));
    CHECK(std::includes(all.begin(), all.end(), balanced.begin(), balanced.end()));
    CHECK(count(balanced, Label::black) == count(all, Label::black));
    CHECK(count(balanced, Label::white) == std::min(count(all, Label::white), count(all, Label::black)));
  }
}

TEST_CASE("property: hop distances recheck and pairs are unique") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    synth::GenConfig cfg;
    cfg.rng_seed = seed;
    cfg.transmission_prob = {0.7, 0.3, 0.3};
    auto g = synth::generate_graph(cfg);
    auto events = synth::simulate_cascade(g, cfg);
    auto ps = pairs::enumerate_pairs(g, events, 3);
    auto adj = g.full_adjacency();
    std::set<std::pair<graph::NodeId, graph::NodeId>> seen;
    std::set<graph::NodeId> defaulted;
    for (const auto& e : events) defaulted.insert(e.node_id);
    for (const auto& p : ps) {
      CHECK(p.hop_distance >= 1);
      CHECK(p.hop_distance <= 3);
      CHECK(graph::bfs_distances(adj, p.source, 3)[p.target] == p.hop_distance);
      CHECK(seen.insert({p.source, p.target}).second);
    }
    for (const auto& p : ps) {
      if (seen.count({p.target, p.source})) CHECK(defaulted.count(p.target));
    }
  }
}

TEST_CASE("pair construction errors") {
  graph::HeteroGraph g(Matrix(3, 1), {1, 1, 0}, {"a"}, {{{0, 1}, {1, 2}}});
  std::vector<DefaultEvent> none;
  CHECK_THROWS_AS(pairs::enumerate_pairs(g, none, 3), Error);
  std::vector<DefaultEvent> only_non_issuer{{2, 0}};
  CHECK_THROWS_AS(pairs::enumerate_pairs(g, only_non_issuer, 3), Error);
  std::vector<DefaultEvent> tie{{0, 0}, {1, 0}};
  Rng rng(1);
  CHECK_THROWS_WITH_AS(pairs::build_pairs(g, tie, 3, rng), "no positive samples; adjust cascade config", Error);
}

TEST_CASE("stratified split of 100 balanced pairs") {
  auto ps = synthetic_pairs(50, 50);
  auto s = pairs::split(ps, 0.8, 7);
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  CHECK(count(s.train, Label::black) == 40);
  CHECK(count(s.train, Label::white) == 40);
  CHECK(count(s.test, Label::black) == 10);
  CHECK(count(s.test, Label::white) == 10);
}

TEST_CASE("split is deterministic and partitions the input") {
  auto ps = synthetic_pairs(37, 23);
  auto a = pairs::split(ps, 0.8, 11);
  auto b = pairs::split(ps, 0.8, 11);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  std::multiset<PropagationPair> joined(a.train.begin(), a.train.end());
  joined.insert(a.test.begin(), a.test.end());
  CHECK(joined == std::multiset<PropagationPair>(ps.begin(), ps.end()));
  double overall = 37.0 / 60.0;
  double train_ratio = static_cast<double>(count(a.train, Label::black)) / a.train.size();
  CHECK(std::abs(train_ratio - overall) <= 0.05);
  auto c = pairs::split(ps, 0.8, 12);
  CHECK_FALSE(c.train == a.train);
}

TEST_CASE("split rejects tiny classes") {
  CHECK_THROWS_AS(pairs::split(synthetic_pairs(4, 20), 0.8, 1), Error);
  CHECK_THROWS_AS(pairs::split(synthetic_pairs(20, 4), 0.8, 1), Error);
}

TEST_CASE("pairs file round trip") {
  auto dir = std::filesystem::temp_directory_path() / "riskprop_pairs_io";
  std::filesystem::remove_all(dir);
  auto s = pairs::split(synthetic_pairs(10, 12), 0.8, 3);
  pairs::save_pairs(s, dir / "pairs.tsv");
  auto back = pairs::load_pairs(dir / "pairs.tsv");
  CHECK(back.train == s.train);
  CHECK(back.test == s.test);
}
