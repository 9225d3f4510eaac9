#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "riskprop/matrix.hpp"
#include "riskprop/pairs.hpp"
#include "riskprop/synthgen.hpp"

namespace riskprop::downstream {

using pairs::PropagationPair;
using synth::TaskFeatures;

/// Merged classifier input [X^t_s | X^p_s | X^t_t | X^p_t]. Pass
/// `embeddings == nullptr` for the task-features-only baseline.
std::vector<double> build_fusion(const PropagationPair& pair, const TaskFeatures& task, const Matrix* embeddings);
Matrix build_design_matrix(std::span<const PropagationPair> pairs, const TaskFeatures& task, const Matrix* embeddings);
std::vector<int> label_vector(std::span<const PropagationPair> pairs);

/// Per-column mean/std fitted on training rows only; zero-variance columns
/// get scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

enum class ClassifierKind { logistic, gradient_boosted_trees };

std::string to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view name);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::logistic;
  double l2 = 1e-3;
  std::size_t iterations = 500;
  double lr = 0.1;
  double threshold = 0.5;
};

/// Binary classifier over fused pair vectors. Inference is pure.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassifierKind kind() const = 0;
  virtual void fit(const Matrix& x, std::span<const int> labels) = 0;
  virtual std::vector<double> predict_proba(const Matrix& x) const = 0;
  virtual void save(const std::filesystem::path& path) const = 0;
};

/// L2-regularised logistic regression trained by full-batch gradient
/// descent on standardized inputs, starting from zero weights.
class LogisticRegression final : public Classifier {
 public:
  explicit LogisticRegression(ClassifierConfig cfg = {}) : cfg_(cfg) {}

  ClassifierKind kind() const override { return ClassifierKind::logistic; }
  void fit(const Matrix& x, std::span<const int> labels) override;
  std::vector<double> predict_proba(const Matrix& x) const override;
  void save(const std::filesystem::path& path) const override;
  static LogisticRegression load(const std::filesystem::path& path);

  /// mean BCE + (l2 / 2) * |w|^2 on already-standardized rows. Writes the
  /// gradient into grad_w (1 x d) and grad_b (1 x 1) when non-null.
  static double objective(const Matrix& xs, std::span<const int> labels, const Matrix& w, double b, double l2,
                          Matrix* grad_w = nullptr, double* grad_b = nullptr);

  const Matrix& weights() const { return w_; }
  double bias() const { return b_; }
  const Standardizer& standardizer() const { return std_; }
  const std::vector<double>& loss_history() const { return history_; }

 private:
  ClassifierConfig cfg_;
  Standardizer std_;
  Matrix w_;
  double b_ = 0.0;
  std::vector<double> history_;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>(const ClassifierConfig&)>;

/// Plug-in point for non-default classifier kinds (e.g. boosted trees).
void register_classifier(ClassifierKind kind, ClassifierFactory factory);
std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& cfg);
std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path);

struct Metrics {
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  double auc = 0.0;
};

/// Micro-averaged F1 over both classes from pooled TP/FP/FN.
double micro_f1(std::span<const int> predicted, std::span<const int> labels);
double accuracy(std::span<const int> predicted, std::span<const int> labels);
/// Mann-Whitney rank statistic with tied scores sharing their mean rank.
/// NaN when either class is absent.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

Metrics evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);
Metrics evaluate(const Classifier& model, std::span<const PropagationPair> test, const TaskFeatures& task,
                 const Matrix* embeddings, double threshold = 0.5);

}  // namespace riskprop::downstream
