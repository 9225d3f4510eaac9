#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "riskprop/downstream.hpp"
#include "riskprop/graph.hpp"
#include "riskprop/hgmae.hpp"
#include "riskprop/pairs.hpp"
#include "riskprop/synthgen.hpp"

namespace riskprop::experiment {

/// Whole-pipeline configuration. On disk it is a flat `key=value` file with
/// section prefixes: `gen.*`, `pretrain.*`, `pairs.*`, `classifier.*`,
/// plus `seeds` and `output_dir`.
struct ExperimentConfig {
  synth::GenConfig gen;
  hgmae::TrainConfig pretrain;
  std::size_t pair_hops = 3;
  double train_frac = 0.8;
  downstream::ClassifierConfig classifier;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError listing every problem across all sections.
  void validate() const;
};

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& origin = "<config>");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string to_config_text(const ExperimentConfig& cfg);

/// A: task features only. B: task features + HGMAE embeddings.
/// C: task features + embeddings pre-trained with eta = 0.
enum class Condition { task_only, hgmae, ablation };

char condition_code(Condition c);
Condition parse_condition(std::string_view code);
constexpr Condition kAllConditions[] = {Condition::task_only, Condition::hgmae, Condition::ablation};

synth::GenConfig gen_config_for(const ExperimentConfig& cfg, std::uint64_t seed);
/// Same initialization and mask streams for B and C; only eta differs.
hgmae::TrainConfig pretrain_config_for(const ExperimentConfig& cfg, Condition c, std::uint64_t seed);

struct SeedData {
  graph::HeteroGraph graph;
  std::vector<synth::DefaultEvent> events;
  synth::TaskFeatures task;
  pairs::PairDatasetSplit split;
};

/// Graph, cascade, task features and the balanced, split pair set for one seed.
SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed);
pairs::PairDatasetSplit make_pair_split(const ExperimentConfig& cfg, const graph::HeteroGraph& g,
                                        const std::vector<synth::DefaultEvent>& events, std::uint64_t seed);

/// Trains the configured classifier on the train split and scores the test split.
downstream::Metrics train_and_evaluate(const ExperimentConfig& cfg, const SeedData& data, const Matrix* embeddings);

struct ResultRow {
  Condition condition = Condition::task_only;
  std::uint64_t seed = 0;
  downstream::Metrics metrics;
};

struct ConditionSummary {
  Condition condition = Condition::task_only;
  std::size_t runs = 0;
  double mean_micro_f1 = 0.0;
  double std_micro_f1 = 0.0;
  double mean_accuracy = 0.0;
  double mean_auc = 0.0;
};

struct ComparisonTable {
  std::vector<ResultRow> rows;  // seed-major, conditions A, B, C within a seed

  std::vector<ConditionSummary> summary() const;
  const ResultRow& find(Condition c, std::uint64_t seed) const;
};

/// In-memory three-condition comparison over every configured seed.
ComparisonTable run_conditions(const ExperimentConfig& cfg);

/// `results.tsv`: one row per (condition, seed) followed by `#summary` lines.
std::string format_results(const ComparisonTable& table);
std::string format_summary(const ComparisonTable& table);

/// Artifact layout under `<output_dir>/seed_<s>/`.
class SeedPaths {
 public:
  SeedPaths(const std::filesystem::path& output_dir, std::uint64_t seed);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path nodes() const { return dir_ / "nodes.tsv"; }
  std::filesystem::path edges() const { return dir_ / "edges.tsv"; }
  std::filesystem::path events() const { return dir_ / "events.tsv"; }
  std::filesystem::path task_features() const { return dir_ / "task_features.tsv"; }
  std::filesystem::path gen_config() const { return dir_ / "gen.config"; }
  std::filesystem::path pairs() const { return dir_ / "pairs.tsv"; }
  std::filesystem::path condition_dir(Condition c) const;
  std::filesystem::path checkpoint(Condition c) const { return condition_dir(c) / "checkpoint.tsv"; }
  std::filesystem::path pretrain_log(Condition c) const { return condition_dir(c) / "pretrain_log.tsv"; }
  std::filesystem::path embeddings(Condition c) const { return condition_dir(c) / "embeddings.tsv"; }
  std::filesystem::path classifier(Condition c) const { return condition_dir(c) / "classifier.tsv"; }
  std::filesystem::path metrics(Condition c) const { return condition_dir(c) / "metrics.tsv"; }

 private:
  std::filesystem::path dir_;
};

// File-based pipeline stages. Each reads only artifacts written by earlier
// stages and fails with "<artifact> not found: <path>" when one is missing.
void stage_generate(const ExperimentConfig& cfg, std::uint64_t seed);
void stage_pairs(const ExperimentConfig& cfg, std::uint64_t seed);
std::vector<std::string> stage_pretrain(const ExperimentConfig& cfg, std::uint64_t seed, Condition c);
void stage_embed(const ExperimentConfig& cfg, std::uint64_t seed, Condition c);
void stage_train(const ExperimentConfig& cfg, std::uint64_t seed, Condition c);
downstream::Metrics stage_evaluate(const ExperimentConfig& cfg, std::uint64_t seed, Condition c);

/// Every stage for every seed and condition, then `results.tsv` and
/// `summary.txt` in the output directory. Progress goes to `log` if non-null.
ComparisonTable run_all(const ExperimentConfig& cfg, std::ostream* log = nullptr);

}  // namespace riskprop::experiment
