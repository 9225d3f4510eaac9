// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "riskprop/downstream.hpp"
#include "riskprop/experiment.hpp"
#include "riskprop/gradcheck.hpp"
#include "riskprop/hgmae.hpp"
#include "riskprop/pairs.hpp"
#include "riskprop/synthgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace riskprop;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("riskprop_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

experiment::ExperimentConfig default_config() {
  return experiment::load_experiment_config(fs::path(RISKPROP_SOURCE_DIR) / "configs/default.config");
}

// 1. Finite-difference check of the full objective with the default architecture.
Outcome gradient_correctness() {
  auto start = Clock::now();
  auto g = fixtures::twelve_node_two_type_graph();
  hgmae::PretrainGraph pg(g);
  hgmae::TrainConfig cfg;
  auto params = hgmae::init_params(g.feature_dim(), cfg);
  params.mask_token = fixtures::random_matrix(1, g.feature_dim(), 5, 0.5);
  params.remask_token = fixtures::random_matrix(1, cfg.embed_dim, 6, 0.5);
  Rng rng(derive_seed(1, "acceptance.gradcheck"));
  auto plans = hgmae::draw_step_plans(pg, cfg, rng);
  auto step = hgmae::hgmae_step(pg, params, cfg, plans, true);
  auto tensors = params.tensors();
  nn::GradCheckOptions opts;
  opts.h = 1e-5;
  opts.tol = 1e-4;
  auto report =
      nn::grad_check([&] { return hgmae::hgmae_step(pg, params, cfg, plans, false).total; }, tensors, step.grads, opts);
  double elapsed = seconds_since(start);
  return {report.passed && elapsed < 60.0,
          std::to_string(report.entries.size()) + " parameters, max rel error " + fmt(report.max_rel_error, 3) +
              ", " + fmt(elapsed, 3) + " s"};
}

// 2. hgmae_step against the term-by-term composition on replayed plans.
Outcome loss_formula() {
  double worst = 0.0;
  bool eta_zero_exact = true;
  std::size_t checks = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    synth::GenConfig gen;
    gen.rng_seed = seed;
    auto g = synth::generate_graph(gen);
    hgmae::PretrainGraph pg(g);
    for (double eta : {1.0, 0.5, 0.0}) {
      hgmae::TrainConfig cfg;
      cfg.eta = eta;
      cfg.rng_seed = seed;
      auto params = hgmae::init_params(g.feature_dim(), cfg);
      params.mask_token = fixtures::random_matrix(1, g.feature_dim(), seed, 0.5);
      params.remask_token = fixtures::random_matrix(1, cfg.embed_dim, seed + 1, 0.5);
      Rng rng(derive_seed(seed, "acceptance.loss"));
      auto plans = hgmae::draw_step_plans(pg, cfg, rng);
      auto step = hgmae::hgmae_step(pg, params, cfg, plans, false);

      auto full_plan = hgmae::sample_mask_from_seed(g.num_nodes(), cfg, plans.full.rng_seed);
      double lo = oracles::part_loss(g.features(), g.full_adjacency(), full_plan, params, cfg.gamma);
      double sum = 0.0;
      std::size_t k_eff = 0;
      for (std::size_t k = 0; k < g.num_edge_types(); ++k) {
        auto s = graph::extract_subgraph(g, k);
        auto plan = hgmae::sample_mask_from_seed(s.num_nodes(), cfg, plans.subgraphs[k].rng_seed);
        sum += oracles::part_loss(s.features, s.adjacency(), plan, params, cfg.gamma);
        ++k_eff;
      }
      double expected = lo + eta / static_cast<double>(k_eff) * sum;
      worst = std::max(worst, std::abs(step.total - expected));
      if (eta == 0.0) eta_zero_exact = eta_zero_exact && step.total == lo;
      ++checks;
    }
  }
  return {worst < 1e-12 && eta_zero_exact, std::to_string(checks) + " steps, max |diff| " + fmt(worst, 3) +
                                               ", eta=0 exact: " + (eta_zero_exact ? "yes" : "no")};
}

// 3. Masking invariants over 10k plans.
Outcome masking_invariants() {
  hgmae::TrainConfig cfg;
  Rng rng(derive_seed(1, "acceptance.masks"));
  bool sizes_ok = true, random_ok = true, rows_ok = true;
  const std::size_t draws = 10000;
  const std::size_t freq_n = 20;
  std::vector<std::size_t> hits(freq_n, 0);
  auto params = hgmae::init_params(4, cfg);
  params.mask_token = fixtures::random_matrix(1, 4, 3);
  for (std::size_t i = 0; i < draws; ++i) {
    // every fourth draw varies n, the rest feed the frequency check
    const std::size_t n = i % 4 == 0 ? 2 + (i / 4) % 199 : freq_n;
    auto plan = hgmae::sample_mask(n, cfg, rng);
    const auto expected = static_cast<std::size_t>(std::llround(cfg.mask_ratio * static_cast<double>(n)));
    sizes_ok = sizes_ok && plan.masked_ids.size() == expected;
    const auto expected_random = static_cast<std::size_t>(
        std::llround(cfg.random_sub_rate * static_cast<double>(plan.masked_ids.size())));
    random_ok = random_ok && plan.count(hgmae::MaskAction::random) == expected_random;
    auto x = fixtures::random_matrix(n, 4, i);
    auto out = hgmae::apply_mask(x, plan, params);
    std::set<std::size_t> masked(plan.masked_ids.begin(), plan.masked_ids.end());
    for (std::size_t v = 0; v < n; ++v) {
      if (!masked.count(v)) rows_ok = rows_ok && std::memcmp(out.row(v).data(), x.row(v).data(), 4 * sizeof(double)) == 0;
    }
    if (n == freq_n && i % 4 != 0)
      for (auto v : plan.masked_ids) ++hits[v];
  }
  const double trials = static_cast<double>(draws - draws / 4);
  const double sd = std::sqrt(trials * 0.25);
  double worst_z = 0.0;
  for (auto h : hits) worst_z = std::max(worst_z, std::abs(static_cast<double>(h) - 0.5 * trials) / sd);
  bool freq_ok = worst_z <= 3.0;
  return {sizes_ok && random_ok && rows_ok && freq_ok,
          std::string("sizes ") + (sizes_ok ? "ok" : "BAD") + ", random counts " + (random_ok ? "ok" : "BAD") +
              ", unmasked rows " + (rows_ok ? "unchanged" : "CHANGED") + ", max |z| of mask frequency " +
              fmt(worst_z, 3)};
}

// 4. Default-config pre-training halves the loss and replays bit-identically.
Outcome training_health() {
  auto cfg = default_config();
  const std::uint64_t seed = cfg.seeds.front();
  auto g = synth::generate_graph(experiment::gen_config_for(cfg, seed));
  auto tcfg = experiment::pretrain_config_for(cfg, experiment::Condition::hgmae, seed);
  auto a = hgmae::pretrain(g, tcfg);
  auto b = hgmae::pretrain(g, tcfg);
  if (a.history.empty()) return {false, "empty loss history"};
  double first = a.history.front().total;
  double last = a.history.back().total;
  bool identical = a.history == b.history;
  return {last < 0.5 * first && identical && a.history.size() == 300,
          std::to_string(a.history.size()) + " epochs, loss " + fmt(first) + " -> " + fmt(last) + " (ratio " +
              fmt(last / first, 3) + "), histories " + (identical ? "bit-identical" : "DIFFER")};
}

// 5. Pre-balance pairs against a brute-force join.
Outcome pair_oracle() {
  std::size_t graphs = 0, pairs_checked = 0;
  bool ok = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    synth::GenConfig gen;
    gen.rng_seed = seed;
    gen.num_nodes = 100 + 20 * (seed - 1);  // 100 .. 280
    if (seed == 10) gen.num_nodes = 300;
    auto g = synth::generate_graph(gen);
    auto events = synth::simulate_cascade(g, gen);
    auto got = pairs::enumerate_pairs(g, events, 3);
    auto expected = oracles::brute_force_pairs(g, events, 3);
    ok = ok && got == expected;
    pairs_checked += expected.size();
    ++graphs;
  }
  return {ok, std::to_string(graphs) + " graphs (100-300 nodes), " + std::to_string(pairs_checked) +
                  " pairs, exact match: " + (ok ? "yes" : "no")};
}

// 6. Three-condition comparison over the default config.
Outcome downstream_uplift() {
  auto cfg = default_config();
  cfg.output_dir = scratch("uplift");
  auto start = Clock::now();
  auto table = experiment::run_all(cfg);
  double elapsed = seconds_since(start);
  auto summary = table.summary();
  double a = 0, b = 0, c = 0;
  for (const auto& s : summary) {
    if (s.condition == experiment::Condition::task_only) a = s.mean_micro_f1;
    if (s.condition == experiment::Condition::hgmae) b = s.mean_micro_f1;
    if (s.condition == experiment::Condition::ablation) c = s.mean_micro_f1;
  }
  std::size_t b_wins = 0;
  for (auto seed : cfg.seeds) {
    if (table.find(experiment::Condition::hgmae, seed).metrics.micro_f1 >=
        table.find(experiment::Condition::ablation, seed).metrics.micro_f1)
      ++b_wins;
  }
  bool ok = cfg.seeds.size() >= 5 && b - a >= 0.03 && b >= c - 0.01 && b_wins >= 3 && elapsed < 600.0;
  return {ok, "mean micro-F1 A " + fmt(a) + ", B " + fmt(b) + ", C " + fmt(c) + "; B-A " + fmt(b - a, 3) +
                  "; B>=C in " + std::to_string(b_wins) + "/" + std::to_string(cfg.seeds.size()) + " seeds; A in (0.5, B): " +
                  (a > 0.5 && a < b ? "yes" : "no") + "; " + fmt(elapsed, 3) + " s"};
}

// 7. Metric fixtures.
Outcome metric_correctness() {
  std::mt19937_64 rng(derive_seed(1, "acceptance.metrics"));
  std::size_t fixtures_checked = 0;
  bool f1_ok = true, auc_ok = true;
  {
    std::vector<int> labels{1, 1, 0, 0}, pred{1, 0, 0, 0};
    f1_ok = f1_ok && downstream::micro_f1(pred, labels) == 0.75 && downstream::accuracy(pred, labels) == 0.75;
    std::vector<double> scores{0.9, 0.4, 0.6, 0.1};
    std::vector<int> y{1, 0, 1, 0};
    auc_ok = auc_ok && downstream::roc_auc(scores, y) == 1.0;
  }
  for (int t = 0; t < 2000; ++t) {
    std::size_t n = 2 + rng() % 19;
    std::vector<int> y(n), p(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      p[i] = static_cast<int>(rng() % 2);
      s[i] = t % 2 ? static_cast<double>(rng() % 5) / 4.0 : std::ldexp(static_cast<double>(rng() >> 11), -53);
    }
    y[0] = 1;
    y[n - 1] = 0;
    f1_ok = f1_ok && downstream::micro_f1(p, y) == downstream::accuracy(p, y);
    auc_ok = auc_ok && downstream::roc_auc(s, y) == oracles::exhaustive_auc(s, y);
    ++fixtures_checked;
  }
  return {f1_ok && auc_ok, std::to_string(fixtures_checked + 1) + " fixtures; micro-F1 == accuracy: " +
                               (f1_ok ? "yes" : "no") + "; AUC == exhaustive ranking: " + (auc_ok ? "yes" : "no")};
}

// 8. Two CLI run_all invocations produce identical bytes.
Outcome reproducibility() {
  auto base = scratch("repro");
  const std::string cli = RISKPROP_CLI_PATH;
  const std::string config = (fs::path(RISKPROP_SOURCE_DIR) / "configs/default.config").string();
  std::vector<fs::path> outs{base / "run1", base / "run2"};
  for (const auto& out : outs) {
    std::string cmd = "\"" + cli + "\" run_all --quiet --config \"" + config + "\" --out \"" + out.string() + "\"";
    if (std::system(cmd.c_str()) != 0) return {false, "run_all exited nonzero"};
  }
  auto r1 = slurp(outs[0] / "results.tsv");
  auto r2 = slurp(outs[1] / "results.tsv");
  bool same_results = !r1.empty() && r1 == r2;
  bool same_summary = slurp(outs[0] / "summary.txt") == slurp(outs[1] / "summary.txt");
  std::size_t files = 0, equal = 0;
  for (const auto& e : fs::recursive_directory_iterator(outs[0])) {
    if (!e.is_regular_file()) continue;
    ++files;
    auto other = outs[1] / fs::relative(e.path(), outs[0]);
    if (fs::exists(other) && slurp(e.path()) == slurp(other)) ++equal;
  }
  return {same_results && same_summary && files == equal,
          std::string("results.tsv ") + (same_results ? "identical" : "DIFFERS") + ", " + std::to_string(equal) +
              "/" + std::to_string(files) + " artifacts identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", gradient_correctness},
      {2, "loss formula oracle", loss_formula},
      {3, "masking invariants", masking_invariants},
      {4, "training health", training_health},
      {5, "pair construction oracle", pair_oracle},
      {6, "downstream uplift", downstream_uplift},
      {7, "metric correctness", metric_correctness},
      {8, "reproducibility", reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::cout << "criterion " << c.id << " " << (o.passed ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
