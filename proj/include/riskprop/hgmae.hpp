#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "riskprop/gat.hpp"
#include "riskprop/graph.hpp"
#include "riskprop/matrix.hpp"
#include "riskprop/rng.hpp"

namespace riskprop::hgmae {

using graph::Adjacency;
using graph::HeteroGraph;

struct TrainConfig {
  double mask_ratio = 0.5;
  /// Fraction of masked nodes whose row is replaced by another node's features.
  double random_sub_rate = 0.15;
  /// SCE exponent.
  double gamma = 1.0;
  /// Weight of the mean per-edge-type subgraph loss.
  double eta = 1.0;
  std::size_t embed_dim = 32;
  std::size_t encoder_heads = 4;
  std::size_t encoder_head_dim = 16;
  double negative_slope = 0.2;
  std::size_t epochs = 300;
  double lr = 0.005;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

std::string to_config_text(const TrainConfig& cfg, std::string_view prefix = "");
bool apply_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);

enum class MaskAction : std::uint8_t { token, random };

/// Masked node set and how each masked row is corrupted. For `random`
/// entries `substitutes[i]` is the unmasked node whose row is copied in;
/// for `token` entries it equals the masked id itself.
struct MaskPlan {
  std::vector<std::size_t> masked_ids;
  std::vector<MaskAction> actions;
  std::vector<std::size_t> substitutes;
  std::uint64_t rng_seed = 0;

  std::size_t count(MaskAction a) const;
  friend bool operator==(const MaskPlan&, const MaskPlan&) = default;
};

/// Uniform sample of round(mask_ratio * n) nodes; round(random_sub_rate *
/// |masked|) of them, chosen uniformly, take the `random` action.
/// Draws one 64-bit seed from `rng` and builds the plan from it alone, so
/// sample_mask_from_seed(n, cfg, plan.rng_seed) replays the plan.
MaskPlan sample_mask(std::size_t n, const TrainConfig& cfg, Rng& rng);
MaskPlan sample_mask_from_seed(std::size_t n, const TrainConfig& cfg, std::uint64_t seed);

struct ModelParams {
  std::vector<nn::GatLayerParams> encoder;
  std::vector<nn::GatLayerParams> decoder;
  Matrix mask_token;    // [MASK], 1 x input_dim
  Matrix remask_token;  // [RMASK], 1 x embed_dim

  std::size_t input_dim() const { return mask_token.cols(); }
  std::size_t embed_dim() const { return remask_token.cols(); }

  /// Flat view in a fixed order shared by gradients, Adam and checkpoints.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::vector<std::string> tensor_names() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Encoder: GAT(heads x head_dim, concat, ELU) -> GAT(1 x embed_dim, ELU).
/// Decoder: GAT(1 x input_dim, identity). Tokens start at zero.
ModelParams init_params(std::size_t input_dim, const TrainConfig& cfg);

/// Token rows := [MASK]; random rows := the substitute's original row;
/// every other row is copied unchanged.
Matrix apply_mask(const Matrix& x, const MaskPlan& plan, const ModelParams& params);

Matrix encode(const Adjacency& adj, const Matrix& features, const ModelParams& params);

/// Replaces every masked latent row with [RMASK], then runs the decoder.
Matrix remask_and_decode(const Matrix& latent, const MaskPlan& plan, const ModelParams& params, const Adjacency& adj);

/// Mean over masked rows of (1 - cos(x_i, z_i))^gamma.
double sce_loss(const Matrix& x, const Matrix& z, std::span<const std::size_t> masked_ids, double gamma,
                std::size_t* zero_norm_rows = nullptr);

/// Full graph plus every non-empty single-type subgraph, with adjacencies
/// built once for the whole training run.
class PretrainGraph {
 public:
  struct Part {
    std::size_t edge_type = 0;
    Matrix features;
    Adjacency adjacency;
  };

  explicit PretrainGraph(const HeteroGraph& g);

  const Part& full() const { return full_; }
  const std::vector<Part>& subgraphs() const { return subgraphs_; }
  const std::vector<std::size_t>& skipped_types() const { return skipped_; }
  std::size_t input_dim() const { return full_.features.cols(); }

 private:
  Part full_;
  std::vector<Part> subgraphs_;
  std::vector<std::size_t> skipped_;
};

struct StepPlans {
  MaskPlan full;
  std::vector<MaskPlan> subgraphs;  // aligned with PretrainGraph::subgraphs()
};

/// Fresh, independent plans for the full graph and each subgraph, in that order.
StepPlans draw_step_plans(const PretrainGraph& pg, const TrainConfig& cfg, Rng& rng);

struct StepResult {
  double total = 0.0;
  double loss_full = 0.0;
  std::vector<double> loss_sub;  // empty when eta == 0
  double loss_sub_mean = 0.0;
  std::vector<Matrix> grads;     // aligned with ModelParams::tensors(); empty if not requested
  std::size_t zero_norm_rows = 0;
};

/// L_full + (eta / K) * sum(sub_losses), with K = sub_losses.size();
/// returns L_full when sub_losses is empty.
double combined_loss(double full_loss, std::span<const double> sub_losses, double eta);

/// total = L_full + (eta / K_eff) * sum_k L_k, where K_eff is the number of
/// non-empty subgraphs. With eta == 0 the subgraph passes are skipped and
/// total == L_full.
StepResult hgmae_step(const PretrainGraph& pg, const ModelParams& params, const TrainConfig& cfg,
                      const StepPlans& plans, bool compute_grads = true);

struct EpochLog {
  std::size_t epoch = 0;
  double total = 0.0;
  double full = 0.0;
  double sub_mean = 0.0;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct PretrainResult {
  ModelParams params;
  std::vector<EpochLog> history;
  std::vector<std::string> warnings;
};

/// Adam over hgmae_step for cfg.epochs full-batch steps. Each history entry
/// holds the loss evaluated before that epoch's update.
PretrainResult pretrain(const HeteroGraph& g, const TrainConfig& cfg);

/// Encoder on the uncorrupted full graph; row v is node v's embedding.
Matrix infer_embeddings(const HeteroGraph& g, const ModelParams& params);

void save_checkpoint(const ModelParams& params, const TrainConfig& cfg, const std::filesystem::path& path);
/// Shapes are validated against `cfg` and `input_dim`.
ModelParams load_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg, std::size_t input_dim);

void save_embeddings(const Matrix& embeddings, const std::filesystem::path& path);
Matrix load_embeddings(const std::filesystem::path& path);

void save_pretrain_log(std::span<const EpochLog> history, const std::filesystem::path& path);

}  // namespace riskprop::hgmae
