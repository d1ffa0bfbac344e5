#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "ordlab/dataio.hpp"
#include "ordlab/plan.hpp"
#include "ordlab/sequence.hpp"

namespace ordlab {

/// Decoder-only transformer shape. Defaults are the minGPT arithmetic setup.
struct ModelConfig {
  int n_layers = 6;
  int n_heads = 6;
  int d_model = 192;
  int ctx_len = 32;
  int vocab_size = 0;
  double dropout = 0.0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct TrainConfig {
  double lr = 5e-5;
  int batch = 64;
  double weight_decay = 0.1;
  std::int64_t max_iters = 20000;
  std::int64_t eval_every = 500;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables.
  double grad_clip = 1.0;
  /// Stop after this many evaluations without a new best accuracy; 0 disables.
  int patience = 0;
  /// Upper bound on held-out rows scored at each evaluation; 0 means all.
  std::size_t eval_rows = 0;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainCurve {
  std::vector<std::int64_t> iters;
  std::vector<double> test_accuracy;
  std::vector<double> train_loss;

  bool operator==(const TrainCurve&) const = default;
};

/// A padded batch of equal-length rows. labels[i] is the token predicted at
/// flat position i; only positions with mask[i] != 0 enter the loss.
struct LmBatch {
  int batch = 0;
  int len = 0;
  std::vector<TokenId> tokens;
  std::vector<TokenId> labels;
  std::vector<std::uint8_t> mask;

  std::size_t counted() const;
};

/// Packs sequences into a right-padded batch (input = seq[:-1], labels = seq[1:]).
LmBatch make_batch(std::span<const LmSequence> seqs);

/// Offsets of every tensor inside the flat parameter vector.
struct ParamLayout {
  struct Block {
    std::size_t ln1_g, ln1_b, qkv_w, qkv_b, proj_w, proj_b, ln2_g, ln2_b, fc_w, fc_b, fc2_w, fc2_b;
  };
  std::size_t wte = 0, wpe = 0, lnf_g = 0, lnf_b = 0, head_w = 0;
  std::vector<Block> blocks;
  std::size_t total = 0;
  /// [begin, end) ranges that receive weight decay (linear-layer weights).
  std::vector<std::pair<std::size_t, std::size_t>> decay_ranges;

  explicit ParamLayout(const ModelConfig& cfg);
};

/// Decoder-only transformer (pre-LayerNorm blocks, GELU MLP, learned absolute
/// positions, untied output head) with a hand-written backward pass.
template <typename Scalar>
class Transformer {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  explicit Transformer(ModelConfig cfg);

  /// N(0, 0.02) weights, N(0, 0.02/sqrt(2L)) residual projections, zero
  /// biases, unit LayerNorm gains.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<Scalar> params() { return params_; }
  std::span<const Scalar> params() const { return params_; }
  std::span<const Scalar> grads() const { return grads_; }

  /// Logits for every position, (batch * len) x vocab, row-major by (b, t).
  Mat logits(std::span<const TokenId> tokens, int batch, int len) const;

  /// Mean masked cross-entropy without touching gradients.
  double loss(const LmBatch& batch) const;

  /// Mean masked cross-entropy; overwrites grads() with its gradient.
  double forward_backward(const LmBatch& batch);

  /// Sum of masked negative log-likelihoods and the number of counted labels.
  std::pair<double, std::size_t> nll_sum(const LmBatch& batch) const;

 private:
  struct LayerCache {
    Mat x_in, ln1, qkv, att_out, x_mid, ln2, fc_pre, fc_act;
    std::vector<Scalar> mean1, rstd1, mean2, rstd2;
    std::vector<Scalar> probs;  // batch * heads * len * len
  };
  struct Cache {
    int batch = 0;
    int len = 0;
    std::vector<LayerCache> layers;
    Mat x_out, lnf;
    std::vector<Scalar> meanf, rstdf;
  };

  Mat forward(std::span<const TokenId> tokens, int batch, int len, Cache* cache) const;
  void check_tokens(std::span<const TokenId> tokens, int batch, int len) const;

  ModelConfig cfg_;
  ParamLayout layout_;
  // Aligned so Eigen's vectorized kernels see the same memory layout, and
  // round the same way, wherever the allocator places the buffers.
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> params_;
  std::vector<Scalar, Eigen::aligned_allocator<Scalar>> grads_;
  Cache cache_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

/// Decoupled-weight-decay Adam (decay applied only inside the layout's decay ranges).
class AdamW {
 public:
  AdamW(const TrainConfig& cfg, const ParamLayout& layout);
  void step(std::span<float> params, std::span<const float> grads);
  std::int64_t steps() const { return t_; }

 private:
  TrainConfig cfg_;
  std::vector<std::uint8_t> decay_;
  std::vector<float> m_;
  std::vector<float> v_;
  std::int64_t t_ = 0;
};

/// Immutable trained-model snapshot with everything needed to evaluate it.
struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  OrderingPlan plan;
  Vocab vocab;
  std::string task_name;
  std::int64_t iteration = 0;
  std::vector<float> params;

  Transformer<float> instantiate() const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// source || target rows; only target positions are labels.
LmSequence arithmetic_sequence(const SeqExample& example);

/// Greedily decodes `steps` tokens after each prompt.
std::vector<TokenSeq> greedy_decode(const Transformer<float>& model, std::span<const TokenSeq> prompts,
                                    std::size_t steps);

/// Fraction of rows whose decoded target, restored through `plan`, equals the
/// original-order ground truth exactly.
double eval_exact_match(const Checkpoint& ckpt, const SeqDataset& dataset_original_order, const OrderingPlan& plan);
double eval_exact_match(const Transformer<float>& model, const SeqDataset& dataset_original_order,
                        const OrderingPlan& plan, std::size_t max_rows = 0);

struct TrainResult {
  Checkpoint checkpoint;
  TrainCurve curve;
};

using ProgressFn = std::function<void(std::int64_t iter, double train_loss, double test_accuracy)>;

/// Trains on `train_set` reordered by `plan` (the permutation is applied here,
/// once) and evaluates exact match on `eval_set` every eval_every iterations.
/// The returned checkpoint holds the parameters with the best held-out accuracy.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const SeqDataset& train_set,
                  const SeqDataset& eval_set, const OrderingPlan& plan, const ProgressFn& progress = {});

struct LmTrainResult {
  Checkpoint checkpoint;
  std::vector<double> loss_curve;  // mean loss per eval_every window
};

/// Plain next-token training on masked sequences (used for text corpora).
LmTrainResult train_lm(const ModelConfig& model_cfg, const TrainConfig& train_cfg, std::span<const LmSequence> data,
                       const Vocab& vocab);

/// exp(mean NLL over unmasked labels).
double eval_masked_perplexity(const Checkpoint& ckpt, std::span<const LmSequence> corpus);
double eval_masked_perplexity(const Transformer<float>& model, std::span<const LmSequence> corpus);
double eval_masked_perplexity(const Checkpoint& ckpt, std::span<const AugmentedSentence> corpus);
/// Total unmasked label count, the quantity that must match between a plain
/// corpus and its augmented counterpart.
std::size_t count_labels(std::span<const LmSequence> corpus);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t n_params = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  bool passed = false;
};

/// Central finite differences against the analytic gradient, in double
/// precision, over every parameter of a small model on a random batch.
/// Relative error uses max(|analytic|, |numeric|, 1e-6) as denominator.
GradCheckReport grad_check(const ModelConfig& small, double tolerance, std::uint64_t seed = 7);

/// Tiny configuration used by grad_check: 1 layer, 2 heads, d_model 8, vocab 11.
ModelConfig grad_check_config();

struct Plateau {
  std::int64_t iteration = 0;
  bool plateaued = false;
};

/// Slides a window of `window` evaluation points along the curve and returns
/// the start of the first window whose secant slope (accuracy per iteration)
/// is below slope_eps and whose mean accuracy is at least min_fraction of the
/// curve's maximum, so a flat start before learning is not a plateau.
/// Never plateauing returns the final iteration with plateaued = false.
Plateau detect_plateau(const TrainCurve& curve, std::size_t window, double slope_eps, double min_fraction = 0.9);

}  // namespace ordlab
