#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "ordlab/error.hpp"
#include "ordlab/permute.hpp"
#include "ordlab/rng.hpp"
#include "ordlab/tinylm.hpp"

namespace ordlab {

namespace {

constexpr char kCheckpointMagic[8] = {'O', 'R', 'D', 'L', 'A', 'B', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::size_t kDecodeChunk = 250;

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

template <typename T>
void put_raw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get_raw(std::string_view in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) {
    throw ValidationError("checkpoint truncated");
  }
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || batch < 1 || weight_decay < 0.0 || max_iters < 0 || eval_every < 1) {
    throw ValidationError("train config: lr/weight_decay must be >= 0, batch and eval_every positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw ValidationError("train config: invalid Adam hyperparameters");
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"n_layers", c.n_layers}, {"n_heads", c.n_heads},       {"d_model", c.d_model},
          {"ctx_len", c.ctx_len},   {"vocab_size", c.vocab_size}, {"dropout", c.dropout}};
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"batch", c.batch},
          {"weight_decay", c.weight_decay},
          {"max_iters", c.max_iters},
          {"eval_every", c.eval_every},
          {"seed", c.seed},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"grad_clip", c.grad_clip},
          {"patience", c.patience},
          {"eval_rows", c.eval_rows}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.d_model = j.value("d_model", c.d_model);
    c.ctx_len = j.value("ctx_len", c.ctx_len);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.dropout = j.value("dropout", c.dropout);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  return c;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.batch = j.value("batch", c.batch);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.seed = j.value("seed", c.seed);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.patience = j.value("patience", c.patience);
    c.eval_rows = j.value("eval_rows", c.eval_rows);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  return c;
}

Transformer<float> Checkpoint::instantiate() const {
  Transformer<float> model(this->model);
  if (params.size() != model.params().size()) {
    throw ValidationError("checkpoint parameter count does not match its config");
  }
  std::copy(params.begin(), params.end(), model.params().begin());
  return model;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const nlohmann::json meta = {{"model", to_json(ckpt.model)},     {"train", to_json(ckpt.train)},
                               {"plan", to_json(ckpt.plan)},       {"vocab", ckpt.vocab.symbols()},
                               {"task_name", ckpt.task_name},      {"iteration", ckpt.iteration},
                               {"n_params", ckpt.params.size()}};
  const std::string meta_text = meta.dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_raw(out, kCheckpointVersion);
  put_raw(out, static_cast<std::uint64_t>(meta_text.size()));
  out += meta_text;
  out.append(reinterpret_cast<const char*>(ckpt.params.data()), ckpt.params.size() * sizeof(float));
  write_text_file(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw ValidationError("not a checkpoint file: " + path.string());
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = get_raw<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto meta_len = get_raw<std::uint64_t>(bytes, pos);
  if (pos + meta_len > bytes.size()) {
    throw ValidationError("checkpoint truncated");
  }
  const auto meta = nlohmann::json::parse(bytes.substr(pos, meta_len));
  pos += meta_len;
  Checkpoint ck;
  ck.model = model_config_from_json(meta.at("model"));
  ck.train = train_config_from_json(meta.at("train"));
  ck.plan = plan_from_json(meta.at("plan"));
  ck.vocab = Vocab(meta.at("vocab").get<std::vector<std::string>>());
  ck.task_name = meta.value("task_name", std::string{});
  ck.iteration = meta.value("iteration", std::int64_t{0});
  const auto n = meta.at("n_params").get<std::size_t>();
  if (bytes.size() - pos != n * sizeof(float)) {
    throw ValidationError("checkpoint parameter block has the wrong size");
  }
  ck.params.resize(n);
  std::memcpy(ck.params.data(), bytes.data() + pos, n * sizeof(float));
  return ck;
}

LmSequence arithmetic_sequence(const SeqExample& example) {
  LmSequence s;
  s.tokens = example.source;
  s.tokens.insert(s.tokens.end(), example.target.begin(), example.target.end());
  s.label_mask.assign(s.tokens.size(), 0);
  std::fill(s.label_mask.begin() + static_cast<std::ptrdiff_t>(example.source.size()), s.label_mask.end(), 1);
  return s;
}

std::vector<TokenSeq> greedy_decode(const Transformer<float>& model, std::span<const TokenSeq> prompts,
                                    std::size_t steps) {
  std::vector<TokenSeq> out(prompts.size());
  for (std::size_t start = 0; start < prompts.size(); start += kDecodeChunk) {
    const std::size_t end = std::min(prompts.size(), start + kDecodeChunk);
    const std::size_t plen = prompts[start].size();
    std::vector<TokenSeq> rows(prompts.begin() + static_cast<std::ptrdiff_t>(start),
                               prompts.begin() + static_cast<std::ptrdiff_t>(end));
    for (const auto& r : rows) {
      if (r.size() != plen || plen == 0) {
        throw ValidationError("greedy_decode: prompts must share one nonzero length");
      }
    }
    for (std::size_t step = 0; step < steps; ++step) {
      const int len = static_cast<int>(plen + step);
      std::vector<TokenId> flat;
      flat.reserve(rows.size() * static_cast<std::size_t>(len));
      for (const auto& r : rows) {
        flat.insert(flat.end(), r.begin(), r.end());
      }
      const auto lg = model.logits(flat, static_cast<int>(rows.size()), len);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Eigen::Index best = 0;
        lg.row(static_cast<Eigen::Index>(i * static_cast<std::size_t>(len)) + len - 1).maxCoeff(&best);
        rows[i].push_back(static_cast<TokenId>(best));
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out[start + i].assign(rows[i].begin() + static_cast<std::ptrdiff_t>(plen), rows[i].end());
    }
  }
  return out;
}

double eval_exact_match(const Transformer<float>& model, const SeqDataset& data, const OrderingPlan& plan,
                        std::size_t max_rows) {
  plan.validate();
  if (data.examples.empty()) {
    throw ValidationError("eval_exact_match: empty dataset");
  }
  if (plan.size() != data.target_len()) {
    throw ValidationError("eval_exact_match: plan length does not match target length");
  }
  const std::size_t n = max_rows == 0 ? data.size() : std::min(max_rows, data.size());
  std::vector<TokenSeq> prompts;
  prompts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    prompts.push_back(data.examples[i].source);
  }
  const auto decoded = greedy_decode(model, prompts, plan.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (restore_output(decoded[i], plan) == data.examples[i].target) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double eval_exact_match(const Checkpoint& ckpt, const SeqDataset& data, const OrderingPlan& plan) {
  if (!(ckpt.vocab == data.vocab)) {
    throw ValidationError("eval_exact_match: checkpoint vocab does not match the dataset");
  }
  const auto model = ckpt.instantiate();
  return eval_exact_match(model, data, plan, 0);
}

TrainResult train(const ModelConfig& model_cfg_in, const TrainConfig& cfg, const SeqDataset& train_set,
                  const SeqDataset& eval_set, const OrderingPlan& plan, const ProgressFn& progress) {
  cfg.validate();
  train_set.validate();
  eval_set.validate();
  if (!(train_set.vocab == eval_set.vocab) || train_set.target_len() != eval_set.target_len() ||
      train_set.source_len() != eval_set.source_len()) {
    throw ValidationError("train and eval sets disagree on vocab or shape");
  }
  ModelConfig model_cfg = model_cfg_in;
  if (model_cfg.vocab_size == 0) {
    model_cfg.vocab_size = static_cast<int>(train_set.vocab.size());
  }
  if (static_cast<std::size_t>(model_cfg.vocab_size) < train_set.vocab.size()) {
    throw ValidationError("model vocab_size is smaller than the dataset vocab");
  }
  const std::size_t row_len = train_set.source_len() + train_set.target_len();
  if (row_len > static_cast<std::size_t>(model_cfg.ctx_len)) {
    throw ValidationError("rows of length " + std::to_string(row_len) + " overflow ctx_len " +
                          std::to_string(model_cfg.ctx_len));
  }

  const SeqDataset permuted = apply_to_dataset(train_set, plan);
  std::vector<LmSequence> rows;
  rows.reserve(permuted.size());
  for (const auto& ex : permuted.examples) {
    rows.push_back(arithmetic_sequence(ex));
  }

  Transformer<float> model(model_cfg);
  model.init(cfg.seed);
  AdamW opt(cfg, model.layout());
  Rng sampler(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  TrainResult result;
  result.checkpoint.model = model_cfg;
  result.checkpoint.train = cfg;
  result.checkpoint.plan = plan;
  result.checkpoint.vocab = train_set.vocab;
  result.checkpoint.task_name = train_set.task_name;

  double best_acc = -1.0;
  int since_best = 0;
  auto evaluate = [&](std::int64_t iter, double window_loss) {
    const double acc = eval_exact_match(model, eval_set, plan, cfg.eval_rows);
    result.curve.iters.push_back(iter);
    result.curve.test_accuracy.push_back(acc);
    result.curve.train_loss.push_back(window_loss);
    if (progress) {
      progress(iter, window_loss, acc);
    }
    if (acc > best_acc) {
      best_acc = acc;
      since_best = 0;
      result.checkpoint.iteration = iter;
      result.checkpoint.params.assign(model.params().begin(), model.params().end());
    } else {
      ++since_best;
    }
  };

  {
    // Iteration 0: loss of the untrained model on one sampled batch.
    std::vector<LmSequence> probe;
    for (int b = 0; b < cfg.batch; ++b) {
      probe.push_back(rows[sampler.index(rows.size())]);
    }
    evaluate(0, model.loss(make_batch(probe)));
  }

  std::vector<LmSequence> batch_rows(static_cast<std::size_t>(cfg.batch));
  double window_loss = 0.0;
  std::int64_t window_n = 0;
  for (std::int64_t it = 1; it <= cfg.max_iters; ++it) {
    for (auto& r : batch_rows) {
      r = rows[sampler.index(rows.size())];
    }
    window_loss += model.forward_backward(make_batch(batch_rows));
    ++window_n;
    opt.step(model.params(), model.grads());
    if (it % cfg.eval_every == 0 || it == cfg.max_iters) {
      evaluate(it, window_loss / static_cast<double>(window_n));
      window_loss = 0.0;
      window_n = 0;
      if (cfg.patience > 0 && since_best >= cfg.patience) {
        break;
      }
      if (best_acc >= 1.0) {
        // Nothing left to improve; later points would repeat the same value.
        break;
      }
    }
  }
  return result;
}

LmTrainResult train_lm(const ModelConfig& model_cfg_in, const TrainConfig& cfg, std::span<const LmSequence> data,
                       const Vocab& vocab) {
  cfg.validate();
  if (data.empty()) {
    throw ValidationError("train_lm: empty corpus");
  }
  ModelConfig model_cfg = model_cfg_in;
  if (model_cfg.vocab_size == 0) {
    model_cfg.vocab_size = static_cast<int>(vocab.size());
  }
  for (const auto& s : data) {
    if (s.tokens.size() > static_cast<std::size_t>(model_cfg.ctx_len) + 1) {
      throw ValidationError("train_lm: sequence longer than ctx_len + 1");
    }
  }
  Transformer<float> model(model_cfg);
  model.init(cfg.seed);
  AdamW opt(cfg, model.layout());
  Rng sampler(cfg.seed ^ 0x9E3779B97F4A7C15ULL);

  LmTrainResult out;
  std::vector<LmSequence> batch_rows(static_cast<std::size_t>(cfg.batch));
  double window = 0.0;
  std::int64_t window_n = 0;
  for (std::int64_t it = 1; it <= cfg.max_iters; ++it) {
    for (auto& r : batch_rows) {
      r = data[sampler.index(data.size())];
    }
    const auto batch = make_batch(batch_rows);
    if (batch.counted() == 0) {
      continue;
    }
    window += model.forward_backward(batch);
    ++window_n;
    opt.step(model.params(), model.grads());
    if (it % cfg.eval_every == 0 || it == cfg.max_iters) {
      out.loss_curve.push_back(window_n ? window / static_cast<double>(window_n) : 0.0);
      window = 0.0;
      window_n = 0;
    }
  }
  out.checkpoint.model = model_cfg;
  out.checkpoint.train = cfg;
  out.checkpoint.plan = identity_plan(1);
  out.checkpoint.vocab = vocab;
  out.checkpoint.iteration = cfg.max_iters;
  out.checkpoint.params.assign(model.params().begin(), model.params().end());
  return out;
}

std::size_t count_labels(std::span<const LmSequence> corpus) {
  std::size_t n = 0;
  for (const auto& s : corpus) {
    for (std::size_t i = 1; i < s.label_mask.size(); ++i) {
      n += s.label_mask[i] ? 1 : 0;
    }
  }
  return n;
}

double eval_masked_perplexity(const Transformer<float>& model, std::span<const LmSequence> corpus) {
  double total = 0.0;
  std::size_t count = 0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
    const auto chunk = corpus.subspan(start, std::min(kChunk, corpus.size() - start));
    const auto batch = make_batch(chunk);
    const auto [nll, n] = model.nll_sum(batch);
    total += nll;
    count += n;
  }
  if (count == 0) {
    throw ValidationError("eval_masked_perplexity: no unmasked labels");
  }
  return std::exp(total / static_cast<double>(count));
}

double eval_masked_perplexity(const Checkpoint& ckpt, std::span<const LmSequence> corpus) {
  return eval_masked_perplexity(ckpt.instantiate(), corpus);
}

double eval_masked_perplexity(const Checkpoint& ckpt, std::span<const AugmentedSentence> corpus) {
  std::vector<LmSequence> seqs;
  seqs.reserve(corpus.size());
  for (const auto& s : corpus) {
    seqs.push_back(to_lm_sequence(s));
  }
  return eval_masked_perplexity(ckpt, seqs);
}

LmSequence to_lm_sequence(const AugmentedSentence& s) {
  if (s.loss_mask.size() != s.augmented.size()) {
    throw ValidationError("augmented sentence: mask/length mismatch");
  }
  LmSequence out;
  out.tokens = s.augmented;
  out.label_mask = s.loss_mask;
  if (!out.label_mask.empty()) {
    out.label_mask[0] = 0;
  }
  return out;
}

LmSequence plain_lm_sequence(const TokenSeq& original) {
  LmSequence out;
  out.tokens = original;
  out.label_mask.assign(original.size(), 1);
  if (!out.label_mask.empty()) {
    out.label_mask[0] = 0;
  }
  return out;
}

ModelConfig grad_check_config() {
  ModelConfig c;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_model = 8;
  c.ctx_len = 8;
  c.vocab_size = 11;
  return c;
}

GradCheckReport grad_check(const ModelConfig& small, double tolerance, std::uint64_t seed) {
  Transformer<double> model(small);
  model.init(seed);
  // Larger-than-default weights so every path carries a visible gradient.
  Rng rng(seed + 1);
  for (auto& p : model.params()) {
    p += 0.3 * rng.normal();
  }

  LmBatch batch;
  batch.batch = 3;
  batch.len = std::min(small.ctx_len, 6);
  const std::size_t n = static_cast<std::size_t>(batch.batch * batch.len);
  for (std::size_t i = 0; i < n; ++i) {
    batch.tokens.push_back(static_cast<TokenId>(rng.index(static_cast<std::size_t>(small.vocab_size))));
    batch.labels.push_back(static_cast<TokenId>(rng.index(static_cast<std::size_t>(small.vocab_size))));
    batch.mask.push_back(i % 4 == 0 ? 0 : 1);
  }

  GradCheckReport rep;
  rep.loss = model.forward_backward(batch);
  const std::vector<double> analytic(model.grads().begin(), model.grads().end());
  rep.n_params = analytic.size();
  double sq = 0.0;
  for (double g : analytic) {
    sq += g * g;
  }
  rep.grad_norm = std::sqrt(sq);

  constexpr double h = 1e-5;
  auto params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = model.loss(batch);
    params[i] = orig - h;
    const double down = model.loss(batch);
    params[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double abs_err = std::abs(numeric - analytic[i]);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
    rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
    rep.max_rel_error = std::max(rep.max_rel_error, abs_err / denom);
  }
  rep.passed = rep.max_rel_error < tolerance;
  return rep;
}

Plateau detect_plateau(const TrainCurve& curve, std::size_t window, double slope_eps, double min_fraction) {
  const auto& acc = curve.test_accuracy;
  const auto& it = curve.iters;
  if (window < 2) {
    throw ValidationError("detect_plateau: window must be >= 2");
  }
  if (acc.size() != it.size() || acc.size() < window) {
    throw ValidationError("detect_plateau: curve shorter than the window");
  }
  const double level = min_fraction * *std::max_element(acc.begin(), acc.end());
  for (std::size_t i = window - 1; i < acc.size(); ++i) {
    const std::size_t j = i + 1 - window;
    double mean = 0.0;
    for (std::size_t k = j; k <= i; ++k) {
      mean += acc[k];
    }
    mean /= static_cast<double>(window);
    const double slope = (acc[i] - acc[j]) / static_cast<double>(it[i] - it[j]);
    if (mean >= level && slope < slope_eps) {
      return {it[j], true};
    }
  }
  return {it.back(), false};
}

}  // namespace ordlab
