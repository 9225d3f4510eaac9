#include "riskprop/experiment.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "riskprop/config_values.hpp"
#include "riskprop/error.hpp"
#include "riskprop/rng.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::experiment {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto collect = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  };
  collect([&] { gen.validate(); });
  collect([&] { pretrain.validate(); });
  if (pair_hops < 1) problems.emplace_back("pairs.N must be >= 1");
  if (!(train_frac > 0.0 && train_frac < 1.0)) problems.emplace_back("pairs.train_frac must lie in (0,1)");
  if (!(classifier.l2 >= 0.0)) problems.emplace_back("classifier.l2 must be >= 0");
  if (!(classifier.lr > 0.0)) problems.emplace_back("classifier.lr must be > 0");
  if (classifier.iterations == 0) problems.emplace_back("classifier.iterations must be >= 1");
  if (!(classifier.threshold > 0.0 && classifier.threshold < 1.0)) problems.emplace_back("classifier.threshold must lie in (0,1)");
  if (seeds.empty()) problems.emplace_back("seeds must list at least one seed");
  if (output_dir.empty()) problems.emplace_back("output_dir must not be empty");
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += "\n" + p;
    throw ConfigError(msg);
  }
}

ExperimentConfig parse_experiment_config(std::string_view text, const fs::path& origin) {
  ExperimentConfig cfg;
  std::vector<std::string> unknown;
  for (const auto& kv : io::parse_key_values_text(text, origin)) {
    std::string_view key = kv.key;
    bool ok = true;
    if (key.starts_with("gen.")) {
      ok = synth::apply_config_value(cfg.gen, key.substr(4), kv.value);
    } else if (key.starts_with("pretrain.")) {
      ok = hgmae::apply_config_value(cfg.pretrain, key.substr(9), kv.value);
    } else if (key == "pairs.N") {
      cfg.pair_hops = config::to_size(kv.value, key);
    } else if (key == "pairs.train_frac") {
      cfg.train_frac = config::to_double(kv.value, key);
    } else if (key == "classifier.kind") {
      cfg.classifier.kind = downstream::classifier_kind_from_string(kv.value);
    } else if (key == "classifier.l2") {
      cfg.classifier.l2 = config::to_double(kv.value, key);
    } else if (key == "classifier.iterations") {
      cfg.classifier.iterations = config::to_size(kv.value, key);
    } else if (key == "classifier.lr") {
      cfg.classifier.lr = config::to_double(kv.value, key);
    } else if (key == "classifier.threshold") {
      cfg.classifier.threshold = config::to_double(kv.value, key);
    } else if (key == "seeds") {
      cfg.seeds = config::to_u64s(kv.value, key);
    } else if (key == "output_dir") {
      cfg.output_dir = kv.value;
    } else {
      ok = false;
    }
    if (!ok) unknown.push_back(origin.string() + ":" + std::to_string(kv.line) + ": unknown key '" + kv.key + "'");
  }
  if (!unknown.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& u : unknown) msg += "\n  - " + u;
    throw ConfigError(msg);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error("config not found: " + path.string());
  return parse_experiment_config(io::read_file(path), path);
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << synth::to_config_text(cfg.gen, "gen.");
  out << hgmae::to_config_text(cfg.pretrain, "pretrain.");
  out << "pairs.N=" << cfg.pair_hops << '\n';
  out << "pairs.train_frac=" << io::format_double(cfg.train_frac) << '\n';
  out << "classifier.kind=" << downstream::to_string(cfg.classifier.kind) << '\n';
  out << "classifier.l2=" << io::format_double(cfg.classifier.l2) << '\n';
  out << "classifier.iterations=" << cfg.classifier.iterations << '\n';
  out << "classifier.lr=" << io::format_double(cfg.classifier.lr) << '\n';
  out << "classifier.threshold=" << io::format_double(cfg.classifier.threshold) << '\n';
  out << "seeds=" << config::join(cfg.seeds) << '\n';
  out << "output_dir=" << cfg.output_dir.string() << '\n';
  return out.str();
}

char condition_code(Condition c) {
  switch (c) {
    case Condition::task_only: return 'A';
    case Condition::hgmae: return 'B';
    case Condition::ablation: return 'C';
  }
  return '?';
}

Condition parse_condition(std::string_view code) {
  if (code == "A") return Condition::task_only;
  if (code == "B") return Condition::hgmae;
  if (code == "C") return Condition::ablation;
  throw ConfigError("unknown condition '" + std::string(code) + "' (expected A, B or C)");
}

synth::GenConfig gen_config_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto g = cfg.gen;
  g.rng_seed = seed;
  return g;
}

hgmae::TrainConfig pretrain_config_for(const ExperimentConfig& cfg, Condition c, std::uint64_t seed) {
  if (c == Condition::task_only) throw Error("condition A uses no pre-training");
  auto t = cfg.pretrain;
  t.rng_seed = seed;
  if (c == Condition::ablation) t.eta = 0.0;
  return t;
}

pairs::PairDatasetSplit make_pair_split(const ExperimentConfig& cfg, const graph::HeteroGraph& g,
                                        const std::vector<synth::DefaultEvent>& events, std::uint64_t seed) {
  auto rng = make_rng(seed, "pairs.balance");
  auto balanced = pairs::build_pairs(g, events, cfg.pair_hops, rng);
  return pairs::split(balanced, cfg.train_frac, derive_seed(seed, "pairs.split"));
}

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto gen = gen_config_for(cfg, seed);
  SeedData d;
  d.graph = synth::generate_graph(gen);
  d.events = synth::simulate_cascade(d.graph, gen);
  d.task = synth::attach_task_features(d.graph, d.events, gen);
  d.split = make_pair_split(cfg, d.graph, d.events, seed);
  return d;
}

downstream::Metrics train_and_evaluate(const ExperimentConfig& cfg, const SeedData& data, const Matrix* embeddings) {
  auto model = downstream::make_classifier(cfg.classifier);
  model->fit(downstream::build_design_matrix(data.split.train, data.task, embeddings),
             downstream::label_vector(data.split.train));
  return downstream::evaluate(*model, data.split.test, data.task, embeddings, cfg.classifier.threshold);
}

ComparisonTable run_conditions(const ExperimentConfig& cfg) {
  cfg.validate();
  ComparisonTable table;
  for (auto seed : cfg.seeds) {
    const auto data = prepare_seed(cfg, seed);
    for (auto c : kAllConditions) {
      Matrix embeddings;
      const Matrix* emb = nullptr;
      if (c != Condition::task_only) {
        auto trained = hgmae::pretrain(data.graph, pretrain_config_for(cfg, c, seed));
        embeddings = hgmae::infer_embeddings(data.graph, trained.params);
        emb = &embeddings;
      }
      table.rows.push_back({c, seed, train_and_evaluate(cfg, data, emb)});
    }
  }
  return table;
}

std::vector<ConditionSummary> ComparisonTable::summary() const {
  std::vector<ConditionSummary> out;
  for (auto c : kAllConditions) {
    ConditionSummary s;
    s.condition = c;
    std::vector<double> f1;
    for (const auto& r : rows) {
      if (r.condition != c) continue;
      f1.push_back(r.metrics.micro_f1);
      s.mean_accuracy += r.metrics.accuracy;
      s.mean_auc += r.metrics.auc;
    }
    s.runs = f1.size();
    if (s.runs == 0) continue;
    const double n = static_cast<double>(s.runs);
    for (double v : f1) s.mean_micro_f1 += v;
    s.mean_micro_f1 /= n;
    s.mean_accuracy /= n;
    s.mean_auc /= n;
    if (s.runs > 1) {
      double ss = 0.0;
      for (double v : f1) ss += (v - s.mean_micro_f1) * (v - s.mean_micro_f1);
      s.std_micro_f1 = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(s);
  }
  return out;
}

const ResultRow& ComparisonTable::find(Condition c, std::uint64_t seed) const {
  for (const auto& r : rows) {
    if (r.condition == c && r.seed == seed) return r;
  }
  throw Error(std::string("no result for condition ") + condition_code(c) + " seed " + std::to_string(seed));
}

std::string format_results(const ComparisonTable& table) {
  std::ostringstream out;
  out << "condition\tseed\tmicro_f1\taccuracy\tauc\n";
  for (const auto& r : table.rows) {
    out << condition_code(r.condition) << '\t' << r.seed << '\t' << io::format_double(r.metrics.micro_f1) << '\t'
        << io::format_double(r.metrics.accuracy) << '\t' << io::format_double(r.metrics.auc) << '\n';
  }
  out << "#summary\tcondition\truns\tmean_micro_f1\tstd_micro_f1\tmean_accuracy\tmean_auc\n";
  for (const auto& s : table.summary()) {
    out << "#summary\t" << condition_code(s.condition) << '\t' << s.runs << '\t' << io::format_double(s.mean_micro_f1)
        << '\t' << io::format_double(s.std_micro_f1) << '\t' << io::format_double(s.mean_accuracy) << '\t'
        << io::format_double(s.mean_auc) << '\n';
  }
  return out.str();
}

std::string format_summary(const ComparisonTable& table) {
  static const char* kNames[] = {"A  task features only", "B  task + HGMAE embeddings", "C  task + eta=0 embeddings"};
  std::ostringstream out;
  char buf[160];
  out << "condition                     runs  micro-F1 (mean +- std)  accuracy   AUC\n";
  for (const auto& s : table.summary()) {
    std::snprintf(buf, sizeof(buf), "%-29s %4zu  %.4f +- %.4f         %.4f     %.4f\n",
                  kNames[static_cast<int>(s.condition)], s.runs, s.mean_micro_f1, s.std_micro_f1, s.mean_accuracy,
                  s.mean_auc);
    out << buf;
  }
  return out.str();
}

SeedPaths::SeedPaths(const fs::path& output_dir, std::uint64_t seed)
    : dir_(output_dir / ("seed_" + std::to_string(seed))) {}

fs::path SeedPaths::condition_dir(Condition c) const { return dir_ / std::string(1, condition_code(c)); }

namespace {

void require_artifact(const fs::path& path, const char* what) {
  if (!fs::exists(path)) throw Error(std::string(what) + " not found: " + path.string());
}

graph::HeteroGraph load_seed_graph(const SeedPaths& p) {
  require_artifact(p.nodes(), "graph nodes");
  require_artifact(p.edges(), "graph edges");
  return graph::load_graph(p.nodes(), p.edges());
}

std::string format_metrics(Condition c, std::uint64_t seed, const downstream::Metrics& m) {
  std::ostringstream out;
  out << "condition\tseed\tmicro_f1\taccuracy\tauc\n"
      << condition_code(c) << '\t' << seed << '\t' << io::format_double(m.micro_f1) << '\t'
      << io::format_double(m.accuracy) << '\t' << io::format_double(m.auc) << '\n';
  return out.str();
}

const Matrix* maybe_embeddings(const SeedPaths& p, Condition c, Matrix& storage, std::size_t num_nodes) {
  if (c == Condition::task_only) return nullptr;
  require_artifact(p.embeddings(c), "embeddings");
  storage = hgmae::load_embeddings(p.embeddings(c));
  if (storage.rows() != num_nodes) {
    throw Error(p.embeddings(c).string() + ": has " + std::to_string(storage.rows()) + " rows, graph has " +
                std::to_string(num_nodes) + " nodes");
  }
  return &storage;
}

}  // namespace

void stage_generate(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SeedPaths p(cfg.output_dir, seed);
  const auto gen = gen_config_for(cfg, seed);
  auto g = synth::generate_graph(gen);
  auto events = synth::simulate_cascade(g, gen);
  auto task = synth::attach_task_features(g, events, gen);
  graph::save_graph(g, p.nodes(), p.edges());
  synth::save_events(events, p.events());
  synth::save_task_features(task, p.task_features());
  synth::save_gen_config(gen, p.gen_config());
}

void stage_pairs(const ExperimentConfig& cfg, std::uint64_t seed) {
  const SeedPaths p(cfg.output_dir, seed);
  auto g = load_seed_graph(p);
  require_artifact(p.events(), "events");
  auto events = synth::load_events(p.events(), g.num_nodes());
  pairs::save_pairs(make_pair_split(cfg, g, events, seed), p.pairs());
}

std::vector<std::string> stage_pretrain(const ExperimentConfig& cfg, std::uint64_t seed, Condition c) {
  const SeedPaths p(cfg.output_dir, seed);
  const auto tcfg = pretrain_config_for(cfg, c, seed);
  auto g = load_seed_graph(p);
  auto result = hgmae::pretrain(g, tcfg);
  hgmae::save_checkpoint(result.params, tcfg, p.checkpoint(c));
  hgmae::save_pretrain_log(result.history, p.pretrain_log(c));
  return result.warnings;
}

void stage_embed(const ExperimentConfig& cfg, std::uint64_t seed, Condition c) {
  const SeedPaths p(cfg.output_dir, seed);
  const auto tcfg = pretrain_config_for(cfg, c, seed);
  auto g = load_seed_graph(p);
  auto params = hgmae::load_checkpoint(p.checkpoint(c), tcfg, g.feature_dim());
  hgmae::save_embeddings(hgmae::infer_embeddings(g, params), p.embeddings(c));
}

void stage_train(const ExperimentConfig& cfg, std::uint64_t seed, Condition c) {
  const SeedPaths p(cfg.output_dir, seed);
  auto g = load_seed_graph(p);
  require_artifact(p.task_features(), "task features");
  require_artifact(p.pairs(), "pairs");
  auto task = synth::load_task_features(p.task_features());
  auto split = pairs::load_pairs(p.pairs());
  Matrix storage;
  const Matrix* emb = maybe_embeddings(p, c, storage, g.num_nodes());
  auto model = downstream::make_classifier(cfg.classifier);
  model->fit(downstream::build_design_matrix(split.train, task, emb), downstream::label_vector(split.train));
  model->save(p.classifier(c));
}

downstream::Metrics stage_evaluate(const ExperimentConfig& cfg, std::uint64_t seed, Condition c) {
  const SeedPaths p(cfg.output_dir, seed);
  auto g = load_seed_graph(p);
  require_artifact(p.task_features(), "task features");
  require_artifact(p.pairs(), "pairs");
  auto task = synth::load_task_features(p.task_features());
  auto split = pairs::load_pairs(p.pairs());
  Matrix storage;
  const Matrix* emb = maybe_embeddings(p, c, storage, g.num_nodes());
  auto model = downstream::load_classifier(p.classifier(c));
  auto metrics = downstream::evaluate(*model, split.test, task, emb, cfg.classifier.threshold);
  io::write_file_atomic(p.metrics(c), format_metrics(c, seed, metrics));
  return metrics;
}

ComparisonTable run_all(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  ComparisonTable table;
  for (auto seed : cfg.seeds) {
    if (log) *log << "seed " << seed << ": generate, pairs\n";
    stage_generate(cfg, seed);
    stage_pairs(cfg, seed);
    for (auto c : kAllConditions) {
      if (c != Condition::task_only) {
        if (log) *log << "seed " << seed << ": pretrain " << condition_code(c) << '\n';
        for (const auto& w : stage_pretrain(cfg, seed, c)) {
          if (log) *log << "warning: " << w << '\n';
        }
        stage_embed(cfg, seed, c);
      }
      stage_train(cfg, seed, c);
      table.rows.push_back({c, seed, stage_evaluate(cfg, seed, c)});
    }
  }
  io::write_file_atomic(cfg.output_dir / "results.tsv", format_results(table));
  io::write_file_atomic(cfg.output_dir / "summary.txt", format_summary(table));
  return table;
}

}  // namespace riskprop::experiment
