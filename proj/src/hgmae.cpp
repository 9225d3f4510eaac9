#include "riskprop/hgmae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "riskprop/config_values.hpp"
#include "riskprop/error.hpp"
#include "riskprop/optim.hpp"
#include "riskprop/tensor_file.hpp"
#include "riskprop/text_io.hpp"

namespace riskprop::hgmae {

using nn::Tape;

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) problems.emplace_back(msg);
  };
  check(mask_ratio > 0.0 && mask_ratio < 1.0, "mask_ratio must lie in (0,1)");
  check(random_sub_rate >= 0.0 && random_sub_rate <= 1.0, "random_sub_rate must lie in [0,1]");
  check(std::isfinite(gamma) && gamma >= 1.0, "gamma must be >= 1");
  check(std::isfinite(eta) && eta >= 0.0, "eta must be >= 0");
  check(embed_dim >= 1, "embed_dim must be >= 1");
  check(encoder_heads >= 1, "encoder_heads must be >= 1");
  check(encoder_head_dim >= 1, "encoder_head_dim must be >= 1");
  check(std::isfinite(negative_slope) && negative_slope >= 0.0, "negative_slope must be >= 0");
  check(std::isfinite(lr) && lr > 0.0, "lr must be > 0");
  if (!problems.empty()) {
    std::string msg = "invalid pre-training config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

std::string to_config_text(const TrainConfig& cfg, std::string_view prefix) {
  std::ostringstream out;
  auto line = [&](const char* key, const std::string& value) { out << prefix << key << '=' << value << '\n'; };
  line("mask_ratio", io::format_double(cfg.mask_ratio));
  line("random_sub_rate", io::format_double(cfg.random_sub_rate));
  line("gamma", io::format_double(cfg.gamma));
  line("eta", io::format_double(cfg.eta));
  line("embed_dim", std::to_string(cfg.embed_dim));
  line("encoder_heads", std::to_string(cfg.encoder_heads));
  line("encoder_head_dim", std::to_string(cfg.encoder_head_dim));
  line("negative_slope", io::format_double(cfg.negative_slope));
  line("epochs", std::to_string(cfg.epochs));
  line("lr", io::format_double(cfg.lr));
  line("rng_seed", std::to_string(cfg.rng_seed));
  return out.str();
}

bool apply_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
  using namespace config;
  if (key == "mask_ratio") cfg.mask_ratio = to_double(value, key);
  else if (key == "random_sub_rate") cfg.random_sub_rate = to_double(value, key);
  else if (key == "gamma") cfg.gamma = to_double(value, key);
  else if (key == "eta") cfg.eta = to_double(value, key);
  else if (key == "embed_dim") cfg.embed_dim = to_size(value, key);
  else if (key == "encoder_heads") cfg.encoder_heads = to_size(value, key);
  else if (key == "encoder_head_dim") cfg.encoder_head_dim = to_size(value, key);
  else if (key == "negative_slope") cfg.negative_slope = to_double(value, key);
  else if (key == "epochs") cfg.epochs = to_size(value, key);
  else if (key == "lr") cfg.lr = to_double(value, key);
  else if (key == "rng_seed") cfg.rng_seed = to_u64(value, key);
  else return false;
  return true;
}

std::size_t MaskPlan::count(MaskAction a) const {
  return static_cast<std::size_t>(std::count(actions.begin(), actions.end(), a));
}

MaskPlan sample_mask_from_seed(std::size_t n, const TrainConfig& cfg, std::uint64_t seed) {
  if (n < 2) throw Error("graph too small to mask: need at least 2 nodes, have " + std::to_string(n));
  const auto masked = static_cast<std::size_t>(std::llround(cfg.mask_ratio * static_cast<double>(n)));
  if (masked == 0) throw Error("graph too small to mask: round(mask_ratio * " + std::to_string(n) + ") is 0");
  if (masked >= n) throw Error("mask would cover all " + std::to_string(n) + " nodes");
  const auto random_count = static_cast<std::size_t>(std::llround(cfg.random_sub_rate * static_cast<double>(masked)));

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  MaskPlan plan;
  plan.rng_seed = seed;
  plan.masked_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(masked));
  std::vector<std::size_t> unmasked(order.begin() + static_cast<std::ptrdiff_t>(masked), order.end());
  std::sort(plan.masked_ids.begin(), plan.masked_ids.end());
  std::sort(unmasked.begin(), unmasked.end());

  plan.actions.assign(masked, MaskAction::token);
  plan.substitutes = plan.masked_ids;
  std::vector<std::size_t> positions(masked);
  std::iota(positions.begin(), positions.end(), 0);
  std::vector<std::size_t> chosen;
  std::sample(positions.begin(), positions.end(), std::back_inserter(chosen), random_count, rng);
  std::uniform_int_distribution<std::size_t> pick(0, unmasked.size() - 1);
  for (auto pos : chosen) {
    plan.actions[pos] = MaskAction::random;
    plan.substitutes[pos] = unmasked[pick(rng)];
  }
  return plan;
}

MaskPlan sample_mask(std::size_t n, const TrainConfig& cfg, Rng& rng) {
  return sample_mask_from_seed(n, cfg, rng());
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  for (auto* stack : {&encoder, &decoder}) {
    for (auto& layer : *stack) {
      for (std::size_t h = 0; h < layer.heads(); ++h) {
        out.push_back(&layer.weights[h]);
        out.push_back(&layer.attention[h]);
      }
    }
  }
  out.push_back(&mask_token);
  out.push_back(&remask_token);
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  auto mutable_view = const_cast<ModelParams*>(this)->tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> out;
  auto add_stack = [&](const std::vector<nn::GatLayerParams>& stack, const char* prefix) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      for (std::size_t h = 0; h < stack[l].heads(); ++h) {
        std::string base = std::string(prefix) + std::to_string(l) + ".head" + std::to_string(h);
        out.push_back(base + ".weight");
        out.push_back(base + ".attention");
      }
    }
  };
  add_stack(encoder, "encoder.layer");
  add_stack(decoder, "decoder.layer");
  out.emplace_back("mask_token");
  out.emplace_back("remask_token");
  return out;
}

ModelParams init_params(std::size_t input_dim, const TrainConfig& cfg) {
  cfg.validate();
  if (input_dim == 0) throw Error("input dimension must be positive");
  auto rng = make_rng(cfg.rng_seed, "hgmae.init");
  using nn::Activation;
  using nn::HeadMerge;
  ModelParams p;
  p.encoder.push_back(nn::init_gat_layer(input_dim, cfg.encoder_heads, cfg.encoder_head_dim, HeadMerge::concat,
                                         Activation::elu, rng, cfg.negative_slope));
  p.encoder.push_back(nn::init_gat_layer(cfg.encoder_heads * cfg.encoder_head_dim, 1, cfg.embed_dim,
                                         HeadMerge::concat, Activation::elu, rng, cfg.negative_slope));
  p.decoder.push_back(nn::init_gat_layer(cfg.embed_dim, 1, input_dim, HeadMerge::concat, Activation::identity, rng,
                                         cfg.negative_slope));
  p.mask_token = Matrix(1, input_dim);
  p.remask_token = Matrix(1, cfg.embed_dim);
  return p;
}

namespace {

void check_plan(const MaskPlan& plan, std::size_t n) {
  if (plan.actions.size() != plan.masked_ids.size() || plan.substitutes.size() != plan.masked_ids.size()) {
    throw Error("mask plan arrays differ in length");
  }
  for (std::size_t i = 0; i < plan.masked_ids.size(); ++i) {
    if (plan.masked_ids[i] >= n || plan.substitutes[i] >= n) throw Error("mask plan index out of range");
  }
}

/// Input with random substitutions applied, plus the rows that take [MASK].
struct Corruption {
  Matrix substituted;
  std::vector<std::size_t> token_rows;
};

Corruption corrupt(const Matrix& x, const MaskPlan& plan) {
  check_plan(plan, x.rows());
  Corruption c{x, {}};
  for (std::size_t i = 0; i < plan.masked_ids.size(); ++i) {
    if (plan.actions[i] == MaskAction::token) {
      c.token_rows.push_back(plan.masked_ids[i]);
    } else {
      auto src = x.row(plan.substitutes[i]);
      std::copy(src.begin(), src.end(), c.substituted.row(plan.masked_ids[i]).begin());
    }
  }
  return c;
}

struct BoundParams {
  std::vector<nn::GatLayerVars> encoder;
  std::vector<nn::GatLayerVars> decoder;
  Tape::Var mask_token;
  Tape::Var remask_token;

  std::vector<Tape::Var> flat() const {
    std::vector<Tape::Var> out;
    for (auto* stack : {&encoder, &decoder}) {
      for (const auto& layer : *stack) {
        for (std::size_t h = 0; h < layer.weights.size(); ++h) {
          out.push_back(layer.weights[h]);
          out.push_back(layer.attention[h]);
        }
      }
    }
    out.push_back(mask_token);
    out.push_back(remask_token);
    return out;
  }
};

BoundParams bind(Tape& tape, const ModelParams& p) {
  BoundParams b;
  for (const auto& l : p.encoder) b.encoder.push_back(nn::bind_gat_layer(tape, l));
  for (const auto& l : p.decoder) b.decoder.push_back(nn::bind_gat_layer(tape, l));
  b.mask_token = tape.variable(p.mask_token);
  b.remask_token = tape.variable(p.remask_token);
  return b;
}

Tape::Var run_stack(Tape& tape, const std::vector<nn::GatLayerParams>& layers, const std::vector<nn::GatLayerVars>& vars,
                    Tape::Var x, const Adjacency& adj) {
  for (std::size_t l = 0; l < layers.size(); ++l) x = nn::gat_forward(tape, layers[l], vars[l], x, adj);
  return x;
}

/// One masked-reconstruction pass; returns the 1x1 SCE node.
Tape::Var reconstruction_loss(Tape& tape, const ModelParams& p, const BoundParams& b, const Matrix& features,
                              const Adjacency& adj, const MaskPlan& plan, double gamma) {
  auto c = corrupt(features, plan);
  auto x = tape.replace_rows(tape.constant(std::move(c.substituted)), c.token_rows, b.mask_token);
  auto h = run_stack(tape, p.encoder, b.encoder, x, adj);
  auto h_remasked = tape.replace_rows(h, plan.masked_ids, b.remask_token);
  auto z = run_stack(tape, p.decoder, b.decoder, h_remasked, adj);
  return tape.scaled_cosine_error(features, z, plan.masked_ids, gamma);
}

void check_input_dim(const ModelParams& p, const Matrix& x) {
  if (x.cols() != p.input_dim()) {
    throw Error("feature dimension " + std::to_string(x.cols()) + " does not match model input dimension " +
                std::to_string(p.input_dim()));
  }
}

}  // namespace

Matrix apply_mask(const Matrix& x, const MaskPlan& plan, const ModelParams& params) {
  check_input_dim(params, x);
  auto c = corrupt(x, plan);
  for (auto r : c.token_rows) {
    std::copy(params.mask_token.row(0).begin(), params.mask_token.row(0).end(), c.substituted.row(r).begin());
  }
  return c.substituted;
}

Matrix encode(const Adjacency& adj, const Matrix& features, const ModelParams& params) {
  check_input_dim(params, features);
  Tape tape;
  auto b = bind(tape, params);
  return tape.value(run_stack(tape, params.encoder, b.encoder, tape.constant(features), adj));
}

Matrix remask_and_decode(const Matrix& latent, const MaskPlan& plan, const ModelParams& params, const Adjacency& adj) {
  check_plan(plan, latent.rows());
  Tape tape;
  auto b = bind(tape, params);
  auto h = tape.replace_rows(tape.constant(latent), plan.masked_ids, b.remask_token);
  return tape.value(run_stack(tape, params.decoder, b.decoder, h, adj));
}

double sce_loss(const Matrix& x, const Matrix& z, std::span<const std::size_t> masked_ids, double gamma,
                std::size_t* zero_norm_rows) {
  return nn::scaled_cosine_error(x, z, masked_ids, gamma, zero_norm_rows);
}

PretrainGraph::PretrainGraph(const HeteroGraph& g) {
  full_.edge_type = g.num_edge_types();
  full_.features = g.features();
  full_.adjacency = g.full_adjacency();
  for (std::size_t k = 0; k < g.num_edge_types(); ++k) {
    if (g.edges(k).empty()) {
      skipped_.push_back(k);
      continue;
    }
    auto sub = graph::extract_subgraph(g, k);
    subgraphs_.push_back(Part{k, sub.features, sub.adjacency()});
  }
}

StepPlans draw_step_plans(const PretrainGraph& pg, const TrainConfig& cfg, Rng& rng) {
  StepPlans plans;
  plans.full = sample_mask(pg.full().features.rows(), cfg, rng);
  for (const auto& part : pg.subgraphs()) plans.subgraphs.push_back(sample_mask(part.features.rows(), cfg, rng));
  return plans;
}

double combined_loss(double full_loss, std::span<const double> sub_losses, double eta) {
  if (sub_losses.empty()) return full_loss;
  double sum = 0.0;
  for (double l : sub_losses) sum += l;
  return full_loss + eta / static_cast<double>(sub_losses.size()) * sum;
}

StepResult hgmae_step(const PretrainGraph& pg, const ModelParams& params, const TrainConfig& cfg,
                      const StepPlans& plans, bool compute_grads) {
  check_input_dim(params, pg.full().features);
  Tape tape;
  auto b = bind(tape, params);
  std::vector<Tape::Var> terms{reconstruction_loss(tape, params, b, pg.full().features, pg.full().adjacency,
                                                   plans.full, cfg.gamma)};
  std::vector<double> weights{1.0};
  const bool use_subgraphs = cfg.eta != 0.0 && !pg.subgraphs().empty();
  if (use_subgraphs) {
    if (plans.subgraphs.size() != pg.subgraphs().size()) throw Error("one mask plan per subgraph required");
    const double w = cfg.eta / static_cast<double>(pg.subgraphs().size());
    for (std::size_t k = 0; k < pg.subgraphs().size(); ++k) {
      const auto& part = pg.subgraphs()[k];
      terms.push_back(reconstruction_loss(tape, params, b, part.features, part.adjacency, plans.subgraphs[k], cfg.gamma));
      weights.push_back(w);
    }
  }
  auto total = tape.weighted_sum(terms, weights);

  StepResult r;
  r.total = tape.scalar(total);
  r.loss_full = tape.scalar(terms[0]);
  for (std::size_t i = 1; i < terms.size(); ++i) r.loss_sub.push_back(tape.scalar(terms[i]));
  if (!r.loss_sub.empty()) {
    r.loss_sub_mean = std::accumulate(r.loss_sub.begin(), r.loss_sub.end(), 0.0) / static_cast<double>(r.loss_sub.size());
  }
  r.zero_norm_rows = tape.zero_norm_rows();
  if (compute_grads) {
    tape.backward(total);
    for (auto v : b.flat()) r.grads.push_back(tape.grad(v));
  }
  return r;
}

PretrainResult pretrain(const HeteroGraph& g, const TrainConfig& cfg) {
  cfg.validate();
  PretrainResult result;
  result.params = init_params(g.feature_dim(), cfg);
  PretrainGraph pg(g);
  for (auto k : pg.skipped_types()) {
    result.warnings.push_back("edge type '" + g.edge_type_names()[k] + "' has no edges; its subgraph loss is skipped");
  }
  if (pg.subgraphs().empty() && cfg.eta != 0.0) {
    result.warnings.push_back("all subgraphs are empty; the objective reduces to the full-graph loss");
  }
  nn::AdamState adam({.lr = cfg.lr});
  auto rng = make_rng(cfg.rng_seed, "hgmae.masks");
  std::size_t degenerate = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto plans = draw_step_plans(pg, cfg, rng);
    StepResult step;
    try {
      step = hgmae_step(pg, result.params, cfg, plans);
    } catch (const NumericFault& e) {
      throw NumericFault("pre-training aborted at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    degenerate += step.zero_norm_rows;
    result.history.push_back({epoch, step.total, step.loss_full, step.loss_sub_mean});
    auto tensors = result.params.tensors();
    adam.step(tensors, step.grads);
  }
  if (degenerate > 0) {
    result.warnings.push_back(std::to_string(degenerate) + " zero-norm rows were scored as cos = 0");
  }
  return result;
}

Matrix infer_embeddings(const HeteroGraph& g, const ModelParams& params) {
  return encode(g.full_adjacency(), g.features(), params);
}

void save_checkpoint(const ModelParams& params, const TrainConfig& cfg, const std::filesystem::path& path) {
  nn::TensorArchive archive;
  archive.meta.emplace_back("format", "riskprop-hgmae");
  archive.meta.emplace_back("input_dim", std::to_string(params.input_dim()));
  std::istringstream echo(to_config_text(cfg, "pretrain."));
  for (std::string line; std::getline(echo, line);) {
    auto eq = line.find('=');
    archive.meta.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  auto names = params.tensor_names();
  auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) archive.tensors.push_back({names[i], *tensors[i]});
  nn::save_tensor_archive(archive, path);
}

ModelParams load_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg, std::size_t input_dim) {
  if (!std::filesystem::exists(path)) throw Error("checkpoint not found: " + path.string());
  auto archive = nn::load_tensor_archive(path);
  auto fmt = archive.find_meta("format");
  if (!fmt || *fmt != "riskprop-hgmae") throw Error(path.string() + ": not an HGMAE checkpoint");
  ModelParams params = init_params(input_dim, cfg);
  auto names = params.tensor_names();
  auto tensors = params.tensors();
  if (archive.tensors.size() != tensors.size()) {
    throw Error(path.string() + ": checkpoint has " + std::to_string(archive.tensors.size()) +
                " tensors, config expects " + std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& t = archive.tensors[i];
    if (t.name != names[i] || !t.value.same_shape(*tensors[i])) {
      throw Error(path.string() + ": tensor '" + t.name + "' (" + std::to_string(t.value.rows()) + "x" +
                  std::to_string(t.value.cols()) + ") does not match expected '" + names[i] + "' (" +
                  std::to_string(tensors[i]->rows()) + "x" + std::to_string(tensors[i]->cols()) + ")");
    }
    *tensors[i] = t.value;
  }
  return params;
}

void save_embeddings(const Matrix& embeddings, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "node_id";
  for (std::size_t j = 0; j < embeddings.cols(); ++j) out << "\te" << j;
  out << '\n';
  for (std::size_t v = 0; v < embeddings.rows(); ++v) {
    out << v;
    for (double x : embeddings.row(v)) out << '\t' << io::format_double(x);
    out << '\n';
  }
  io::write_file_atomic(path, out.str());
}

Matrix load_embeddings(const std::filesystem::path& path) {
  io::LineReader in(path);
  std::string line;
  if (!in.next(line)) in.fail("missing header");
  auto header = io::split(line, '\t');
  if (header.empty() || header[0] != "node_id") in.fail("expected header 'node_id<TAB>e0..'");
  const std::size_t dim = header.size() - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  while (in.next(line)) {
    if (line.empty()) continue;
    auto cols = io::split(line, '\t');
    if (cols.size() != dim + 1) in.fail("expected " + std::to_string(dim + 1) + " columns");
    if (io::parse_uint(cols[0], path, in.line_number()) != rows) in.fail("node ids must be dense and ascending");
    for (std::size_t j = 0; j < dim; ++j) values.push_back(io::parse_double(cols[j + 1], path, in.line_number()));
    ++rows;
  }
  Matrix m(rows, dim);
  std::copy(values.begin(), values.end(), m.values().begin());
  return m;
}

void save_pretrain_log(std::span<const EpochLog> history, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "epoch\tloss_total\tloss_o\tloss_sub_mean\n";
  for (const auto& e : history) {
    out << e.epoch << '\t' << io::format_double(e.total) << '\t' << io::format_double(e.full) << '\t'
        << io::format_double(e.sub_mean) << '\n';
  }
  io::write_file_atomic(path, out.str());
}

}  // namespace riskprop::hgmae
