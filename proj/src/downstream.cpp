#include "riskprop/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "riskprop/error.hpp"
#include "riskprop/tensor_file.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::downstream {

namespace {

void append_row(std::vector<double>& out, std::span<const double> row) { out.insert(out.end(), row.begin(), row.end()); }

void append_node(std::vector<double>& out, graph::NodeId node, const TaskFeatures& task, const Matrix* embeddings) {
  append_row(out, task.values.row(task.row_of(node)));
  if (embeddings) {
    if (node >= embeddings->rows()) throw Error("missing embedding row for node " + std::to_string(node));
    append_row(out, embeddings->row(node));
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_labels(const Matrix& x, std::span<const int> labels) {
  if (x.rows() != labels.size()) throw Error("row count does not match label count");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
  }
}

std::map<ClassifierKind, ClassifierFactory>& registry() {
  static std::map<ClassifierKind, ClassifierFactory> factories{
      {ClassifierKind::logistic, [](const ClassifierConfig& c) { return std::make_unique<LogisticRegression>(c); }}};
  return factories;
}

}  // namespace

std::vector<double> build_fusion(const PropagationPair& pair, const TaskFeatures& task, const Matrix* embeddings) {
  std::vector<double> out;
  append_node(out, pair.source, task, embeddings);
  append_node(out, pair.target, task, embeddings);
  return out;
}

Matrix build_design_matrix(std::span<const PropagationPair> pairs, const TaskFeatures& task, const Matrix* embeddings) {
  const std::size_t width = 2 * (task.values.cols() + (embeddings ? embeddings->cols() : 0));
  Matrix x(pairs.size(), width);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto row = build_fusion(pairs[i], task, embeddings);
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  return x;
}

std::vector<int> label_vector(std::span<const PropagationPair> pairs) {
  std::vector<int> y;
  y.reserve(pairs.size());
  for (const auto& p : pairs) y.push_back(p.label == pairs::Label::black ? 1 : 0);
  return y;
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() == 0) throw Error("cannot standardize an empty matrix");
  Standardizer s;
  s.mean.assign(x.cols(), 0.0);
  s.scale.assign(x.cols(), 0.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) s.mean[j] += x(i, j);
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double d = x(i, j) - s.mean[j];
      s.scale[j] += d * d;
    }
  }
  for (double& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error("standardizer fitted on " + std::to_string(mean.size()) + " columns, got " +
                                           std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
  }
  return out;
}

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::logistic ? "logistic" : "gradient-boosted-trees";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
  if (name == "logistic") return ClassifierKind::logistic;
  if (name == "gradient-boosted-trees") return ClassifierKind::gradient_boosted_trees;
  throw ConfigError("unknown classifier kind '" + std::string(name) + "' (expected logistic or gradient-boosted-trees)");
}

double LogisticRegression::objective(const Matrix& xs, std::span<const int> labels, const Matrix& w, double b,
                                     double l2, Matrix* grad_w, double* grad_b) {
  check_labels(xs, labels);
  const double n = static_cast<double>(xs.rows());
  double loss = 0.0;
  if (grad_w) *grad_w = Matrix(1, xs.cols());
  if (grad_b) *grad_b = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    auto xi = xs.row(i);
    double z = b;
    for (std::size_t j = 0; j < xi.size(); ++j) z += w(0, j) * xi[j];
    // BCE = softplus(z) - y z
    loss += softplus(z) - labels[i] * z;
    const double err = sigmoid(z) - labels[i];
    if (grad_w) {
      for (std::size_t j = 0; j < xi.size(); ++j) (*grad_w)(0, j) += err * xi[j] / n;
    }
    if (grad_b) *grad_b += err / n;
  }
  loss /= n;
  double wsq = 0.0;
  for (std::size_t j = 0; j < w.cols(); ++j) {
    wsq += w(0, j) * w(0, j);
    if (grad_w) (*grad_w)(0, j) += l2 * w(0, j);
  }
  return loss + 0.5 * l2 * wsq;
}

void LogisticRegression::fit(const Matrix& x, std::span<const int> labels) {
  check_labels(x, labels);
  if (x.rows() == 0) throw Error("cannot fit on an empty training split");
  std_ = Standardizer::fit(x);
  const Matrix xs = std_.apply(x);
  w_ = Matrix(1, x.cols());
  b_ = 0.0;
  history_.clear();
  Matrix gw;
  double gb = 0.0;
  for (std::size_t it = 0; it < cfg_.iterations; ++it) {
    const double loss = objective(xs, labels, w_, b_, cfg_.l2, &gw, &gb);
    if (!std::isfinite(loss)) throw NumericFault("logistic regression loss became non-finite at iteration " + std::to_string(it));
    history_.push_back(loss);
    for (std::size_t j = 0; j < w_.cols(); ++j) w_(0, j) -= cfg_.lr * gw(0, j);
    b_ -= cfg_.lr * gb;
  }
}

std::vector<double> LogisticRegression::predict_proba(const Matrix& x) const {
  if (w_.empty() && x.cols() != 0) throw Error("logistic regression is not fitted");
  const Matrix xs = std_.apply(x);
  std::vector<double> out(xs.rows());
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    double z = b_;
    for (std::size_t j = 0; j < xs.cols(); ++j) z += w_(0, j) * xs(i, j);
    out[i] = sigmoid(z);
  }
  return out;
}

void LogisticRegression::save(const std::filesystem::path& path) const {
  nn::TensorArchive a;
  a.meta = {{"format", "riskprop-classifier"},
            {"kind", to_string(kind())},
            {"l2", io::format_double(cfg_.l2)},
            {"iterations", std::to_string(cfg_.iterations)},
            {"lr", io::format_double(cfg_.lr)},
            {"threshold", io::format_double(cfg_.threshold)}};
  Matrix mean(1, std_.mean.size()), scale(1, std_.scale.size());
  std::copy(std_.mean.begin(), std_.mean.end(), mean.values().begin());
  std::copy(std_.scale.begin(), std_.scale.end(), scale.values().begin());
  a.tensors = {{"weights", w_}, {"bias", Matrix(1, 1, b_)}, {"feature_mean", mean}, {"feature_scale", scale}};
  nn::save_tensor_archive(a, path);
}

LogisticRegression LogisticRegression::load(const std::filesystem::path& path) {
  auto a = nn::load_tensor_archive(path);
  auto kind = a.find_meta("kind");
  if (!kind || *kind != "logistic" || a.tensors.size() != 4) throw Error(path.string() + ": not a logistic classifier");
  ClassifierConfig cfg;
  if (auto v = a.find_meta("l2")) cfg.l2 = io::parse_double(*v, path, 0);
  if (auto v = a.find_meta("iterations")) cfg.iterations = io::parse_uint(*v, path, 0);
  if (auto v = a.find_meta("lr")) cfg.lr = io::parse_double(*v, path, 0);
  if (auto v = a.find_meta("threshold")) cfg.threshold = io::parse_double(*v, path, 0);
  LogisticRegression m(cfg);
  m.w_ = a.tensors[0].value;
  m.b_ = a.tensors[1].value(0, 0);
  auto mean = a.tensors[2].value.values();
  auto scale = a.tensors[3].value.values();
  m.std_.mean.assign(mean.begin(), mean.end());
  m.std_.scale.assign(scale.begin(), scale.end());
  if (m.w_.cols() != m.std_.mean.size() || m.std_.mean.size() != m.std_.scale.size()) {
    throw Error(path.string() + ": inconsistent classifier tensor shapes");
  }
  return m;
}

void register_classifier(ClassifierKind kind, ClassifierFactory factory) { registry()[kind] = std::move(factory); }

std::unique_ptr<Classifier> make_classifier(const ClassifierConfig& cfg) {
  auto it = registry().find(cfg.kind);
  if (it == registry().end()) {
    throw ConfigError("no " + to_string(cfg.kind) + " classifier is registered; use register_classifier() to add one");
  }
  return it->second(cfg);
}

std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("classifier not found: " + path.string());
  return std::make_unique<LogisticRegression>(LogisticRegression::load(path));
}

double micro_f1(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw Error("prediction/label count mismatch");
  if (labels.empty()) return 0.0;
  // Pool per-class counts over both classes.
  std::size_t tp = 0, fp = 0, fn = 0;
  for (int cls : {0, 1}) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (predicted[i] == cls && labels[i] == cls) ++tp;
      else if (predicted[i] == cls) ++fp;
      else if (labels[i] == cls) ++fn;
    }
  }
  // F1 = 2PR/(P+R) = 2TP/(2TP+FP+FN), evaluated on exact integer counts.
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw Error("prediction/label count mismatch");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("score/label count mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += mean_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

Metrics evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  std::vector<int> predicted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= threshold ? 1 : 0;
  return {micro_f1(predicted, labels), accuracy(predicted, labels), roc_auc(scores, labels)};
}

Metrics evaluate(const Classifier& model, std::span<const PropagationPair> test, const TaskFeatures& task,
                 const Matrix* embeddings, double threshold) {
  auto x = build_design_matrix(test, task, embeddings);
  auto y = label_vector(test);
  return evaluate_scores(model.predict_proba(x), y, threshold);
}

}  // namespace riskprop::downstream
