#include <algorithm>
#include <cmath>
#include <numbers>

#include "ordlab/error.hpp"
#include "ordlab/rng.hpp"
#include "ordlab/tinylm.hpp"

namespace ordlab {

void ModelConfig::validate() const {
  if (n_layers < 1 || n_heads < 1 || d_model < 1 || ctx_len < 2) {
    throw ValidationError("model config: layers, heads, d_model must be positive and ctx_len >= 2");
  }
  if (d_model % n_heads != 0) {
    throw ValidationError("model config: d_model must be divisible by n_heads");
  }
  if (vocab_size < 1) {
    throw ValidationError("model config: vocab_size must be set");
  }
  if (dropout != 0.0) {
    throw ValidationError("model config: only dropout 0 is supported");
  }
}

ParamLayout::ParamLayout(const ModelConfig& cfg) {
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
  const std::size_t ctx = static_cast<std::size_t>(cfg.ctx_len);
  std::size_t off = 0;
  auto take = [&off](std::size_t n) {
    const std::size_t at = off;
    off += n;
    return at;
  };
  auto take_decay = [&](std::size_t n) {
    const std::size_t at = take(n);
    decay_ranges.emplace_back(at, at + n);
    return at;
  };
  wte = take(v * d);
  wpe = take(ctx * d);
  for (int l = 0; l < cfg.n_layers; ++l) {
    Block b{};
    b.ln1_g = take(d);
    b.ln1_b = take(d);
    b.qkv_w = take_decay(3 * d * d);
    b.qkv_b = take(3 * d);
    b.proj_w = take_decay(d * d);
    b.proj_b = take(d);
    b.ln2_g = take(d);
    b.ln2_b = take(d);
    b.fc_w = take_decay(4 * d * d);
    b.fc_b = take(4 * d);
    b.fc2_w = take_decay(4 * d * d);
    b.fc2_b = take(d);
    blocks.push_back(b);
  }
  lnf_g = take(d);
  lnf_b = take(d);
  head_w = take_decay(v * d);
  total = off;
}

std::size_t LmBatch::counted() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

LmBatch make_batch(std::span<const LmSequence> seqs) {
  if (seqs.empty()) {
    throw ValidationError("empty batch");
  }
  std::size_t longest = 0;
  for (const auto& s : seqs) {
    if (s.tokens.size() < 2) {
      throw ValidationError("sequence needs at least two tokens");
    }
    if (s.label_mask.size() != s.tokens.size()) {
      throw ValidationError("mask/length mismatch");
    }
    longest = std::max(longest, s.tokens.size());
  }
  LmBatch b;
  b.batch = static_cast<int>(seqs.size());
  b.len = static_cast<int>(longest - 1);
  const std::size_t n = seqs.size() * (longest - 1);
  b.tokens.assign(n, 0);
  b.labels.assign(n, 0);
  b.mask.assign(n, 0);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto& s = seqs[i];
    const std::size_t row = i * (longest - 1);
    for (std::size_t t = 0; t + 1 < s.tokens.size(); ++t) {
      b.tokens[row + t] = s.tokens[t];
      b.labels[row + t] = s.tokens[t + 1];
      b.mask[row + t] = s.label_mask[t + 1];
    }
  }
  return b;
}

namespace {

template <typename Scalar>
using MatT = typename Transformer<Scalar>::Mat;
template <typename Scalar>
using MapM = Eigen::Map<MatT<Scalar>>;
template <typename Scalar>
using CMapM = Eigen::Map<const MatT<Scalar>>;
template <typename Scalar>
using RowV = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using MapRow = Eigen::Map<RowV<Scalar>>;
template <typename Scalar>
using CMapRow = Eigen::Map<const RowV<Scalar>>;

template <typename Scalar>
using ParamVec = std::vector<Scalar, Eigen::aligned_allocator<Scalar>>;

constexpr double kLnEps = 1e-5;

template <typename Scalar>
CMapM<Scalar> cmat(const ParamVec<Scalar>& p, std::size_t off, std::size_t rows, std::size_t cols) {
  return CMapM<Scalar>(p.data() + off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename Scalar>
MapM<Scalar> mmat(ParamVec<Scalar>& p, std::size_t off, std::size_t rows, std::size_t cols) {
  return MapM<Scalar>(p.data() + off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename Scalar>
CMapRow<Scalar> crow(const ParamVec<Scalar>& p, std::size_t off, std::size_t n) {
  return CMapRow<Scalar>(p.data() + off, static_cast<Eigen::Index>(n));
}

template <typename Scalar>
MapRow<Scalar> mrow(ParamVec<Scalar>& p, std::size_t off, std::size_t n) {
  return MapRow<Scalar>(p.data() + off, static_cast<Eigen::Index>(n));
}

/// y = x W^T + b, W stored (out x in) row-major.
template <typename Scalar>
void linear(const MatT<Scalar>& x, const CMapM<Scalar>& w, const CMapRow<Scalar>& b, MatT<Scalar>& y) {
  y.resize(x.rows(), w.rows());
  y.noalias() = x * w.transpose();
  y.rowwise() += b;
}

template <typename Scalar>
void layer_norm(const MatT<Scalar>& x, const CMapRow<Scalar>& g, const CMapRow<Scalar>& b, MatT<Scalar>& y,
                std::vector<Scalar>* mean_out, std::vector<Scalar>* rstd_out) {
  const auto n = x.rows();
  const auto d = x.cols();
  y.resize(n, d);
  if (mean_out) {
    mean_out->resize(static_cast<std::size_t>(n));
    rstd_out->resize(static_cast<std::size_t>(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar mean = x.row(i).mean();
    const Scalar var = (x.row(i).array() - mean).square().mean();
    const Scalar rstd = Scalar(1) / std::sqrt(var + static_cast<Scalar>(kLnEps));
    y.row(i) = (((x.row(i).array() - mean) * rstd) * g.array() + b.array()).matrix();
    if (mean_out) {
      (*mean_out)[static_cast<std::size_t>(i)] = mean;
      (*rstd_out)[static_cast<std::size_t>(i)] = rstd;
    }
  }
}

/// Accumulates dg, db and returns dx for y = LN(x) * g + b.
template <typename Scalar>
void layer_norm_backward(const MatT<Scalar>& dy, const MatT<Scalar>& x, const std::vector<Scalar>& mean,
                         const std::vector<Scalar>& rstd, const CMapRow<Scalar>& g, MapRow<Scalar> dg,
                         MapRow<Scalar> db, MatT<Scalar>& dx_accum) {
  const auto n = x.rows();
  const auto d = static_cast<Scalar>(x.cols());
  RowV<Scalar> xhat(x.cols());
  RowV<Scalar> dxhat(x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    xhat = ((x.row(i).array() - mean[si]) * rstd[si]).matrix();
    dg.array() += dy.row(i).array() * xhat.array();
    db += dy.row(i);
    dxhat = (dy.row(i).array() * g.array()).matrix();
    const Scalar mean_dxhat = dxhat.sum() / d;
    const Scalar mean_dxhat_xhat = dxhat.dot(xhat) / d;
    dx_accum.row(i).array() += rstd[si] * (dxhat.array() - mean_dxhat - xhat.array() * mean_dxhat_xhat);
  }
}

template <typename Scalar>
Scalar gelu_c() {
  return static_cast<Scalar>(std::sqrt(2.0 / std::numbers::pi));
}

/// tanh-approximated GELU, elementwise.
template <typename Scalar>
void gelu(const MatT<Scalar>& x, MatT<Scalar>& y) {
  const Scalar c = gelu_c<Scalar>();
  const auto xa = x.array();
  y = (Scalar(0.5) * xa * (Scalar(1) + (c * (xa + Scalar(0.044715) * xa.cube())).tanh())).matrix();
}

template <typename Scalar>
void gelu_backward(const MatT<Scalar>& x, MatT<Scalar>& dy_inout) {
  const Scalar c = gelu_c<Scalar>();
  const auto xa = x.array();
  const auto th = (c * (xa + Scalar(0.044715) * xa.cube())).tanh().eval();
  const auto dgelu = (Scalar(0.5) * (Scalar(1) + th) +
                      Scalar(0.5) * xa * (Scalar(1) - th.square()) * c * (Scalar(1) + Scalar(3 * 0.044715) * xa.square()));
  dy_inout.array() *= dgelu;
}

}  // namespace

template <typename Scalar>
Transformer<Scalar>::Transformer(ModelConfig cfg) : cfg_(cfg), layout_((cfg.validate(), cfg)) {
  params_.assign(layout_.total, Scalar(0));
  grads_.assign(layout_.total, Scalar(0));
}

template <typename Scalar>
void Transformer<Scalar>::init(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  const double std_w = 0.02;
  const double std_res = 0.02 / std::sqrt(2.0 * cfg_.n_layers);
  auto fill_normal = [&](std::size_t off, std::size_t n, double stddev) {
    for (std::size_t i = 0; i < n; ++i) {
      params_[off + i] = static_cast<Scalar>(rng.normal() * stddev);
    }
  };
  auto fill = [&](std::size_t off, std::size_t n, Scalar v) {
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(off), n, v);
  };
  const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
  fill_normal(layout_.wte, v * d, std_w);
  fill_normal(layout_.wpe, static_cast<std::size_t>(cfg_.ctx_len) * d, std_w);
  for (const auto& b : layout_.blocks) {
    fill(b.ln1_g, d, Scalar(1));
    fill(b.ln1_b, d, Scalar(0));
    fill_normal(b.qkv_w, 3 * d * d, std_w);
    fill(b.qkv_b, 3 * d, Scalar(0));
    fill_normal(b.proj_w, d * d, std_res);
    fill(b.proj_b, d, Scalar(0));
    fill(b.ln2_g, d, Scalar(1));
    fill(b.ln2_b, d, Scalar(0));
    fill_normal(b.fc_w, 4 * d * d, std_w);
    fill(b.fc_b, 4 * d, Scalar(0));
    fill_normal(b.fc2_w, 4 * d * d, std_res);
    fill(b.fc2_b, d, Scalar(0));
  }
  fill(layout_.lnf_g, d, Scalar(1));
  fill(layout_.lnf_b, d, Scalar(0));
  fill_normal(layout_.head_w, v * d, std_w);
}

template <typename Scalar>
void Transformer<Scalar>::check_tokens(std::span<const TokenId> tokens, int batch, int len) const {
  if (batch < 1 || len < 1) {
    throw ValidationError("forward: empty input");
  }
  if (len > cfg_.ctx_len) {
    throw ValidationError("forward: sequence length " + std::to_string(len) + " exceeds ctx_len " +
                          std::to_string(cfg_.ctx_len));
  }
  if (tokens.size() != static_cast<std::size_t>(batch) * static_cast<std::size_t>(len)) {
    throw ValidationError("forward: token count does not match batch x len");
  }
  for (TokenId t : tokens) {
    if (t < 0 || t >= cfg_.vocab_size) {
      throw ValidationError("forward: token id out of range: " + std::to_string(t));
    }
  }
}

template <typename Scalar>
typename Transformer<Scalar>::Mat Transformer<Scalar>::forward(std::span<const TokenId> tokens, int batch, int len,
                                                               Cache* cache) const {
  check_tokens(tokens, batch, len);
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
  const int heads = cfg_.n_heads;
  const int hd = cfg_.d_model / heads;
  const auto n = static_cast<Eigen::Index>(tokens.size());
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(hd));

  Mat x(n, static_cast<Eigen::Index>(d));
  const auto wte = cmat(params_, layout_.wte, v, d);
  const auto wpe = cmat(params_, layout_.wpe, static_cast<std::size_t>(cfg_.ctx_len), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = wte.row(tokens[static_cast<std::size_t>(i)]) + wpe.row(i % len);
  }

  if (cache) {
    cache->batch = batch;
    cache->len = len;
    cache->layers.resize(layout_.blocks.size());
  }

  Mat ln, qkv, att_out, tmp, fc_pre, fc_act;
  std::vector<Scalar> probs(static_cast<std::size_t>(len));
  for (std::size_t l = 0; l < layout_.blocks.size(); ++l) {
    const auto& blk = layout_.blocks[l];
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) {
      lc->x_in = x;
    }
    layer_norm<Scalar>(x, crow(params_, blk.ln1_g, d), crow(params_, blk.ln1_b, d), ln, lc ? &lc->mean1 : nullptr,
                       lc ? &lc->rstd1 : nullptr);
    linear<Scalar>(ln, cmat(params_, blk.qkv_w, 3 * d, d), crow(params_, blk.qkv_b, 3 * d), qkv);
    if (lc) {
      lc->ln1 = ln;
      lc->probs.assign(static_cast<std::size_t>(batch * heads * len * len), Scalar(0));
    }

    att_out.setZero(n, static_cast<Eigen::Index>(d));
    for (int b = 0; b < batch; ++b) {
      for (int h = 0; h < heads; ++h) {
        const Eigen::Index qc = h * hd;
        const Eigen::Index kc = static_cast<Eigen::Index>(d) + h * hd;
        const Eigen::Index vc = 2 * static_cast<Eigen::Index>(d) + h * hd;
        for (int t = 0; t < len; ++t) {
          const Eigen::Index rt = b * len + t;
          Scalar mx = -std::numeric_limits<Scalar>::infinity();
          for (int s = 0; s <= t; ++s) {
            const Eigen::Index rs = b * len + s;
            probs[static_cast<std::size_t>(s)] = qkv.row(rt).segment(qc, hd).dot(qkv.row(rs).segment(kc, hd)) * scale;
            mx = std::max(mx, probs[static_cast<std::size_t>(s)]);
          }
          Scalar sum = 0;
          for (int s = 0; s <= t; ++s) {
            probs[static_cast<std::size_t>(s)] = std::exp(probs[static_cast<std::size_t>(s)] - mx);
            sum += probs[static_cast<std::size_t>(s)];
          }
          for (int s = 0; s <= t; ++s) {
            const Scalar p = probs[static_cast<std::size_t>(s)] / sum;
            att_out.row(rt).segment(qc, hd) += p * qkv.row(b * len + s).segment(vc, hd);
            if (lc) {
              lc->probs[static_cast<std::size_t>(((b * heads + h) * len + t) * len + s)] = p;
            }
          }
        }
      }
    }
    linear<Scalar>(att_out, cmat(params_, blk.proj_w, d, d), crow(params_, blk.proj_b, d), tmp);
    x += tmp;
    if (lc) {
      lc->qkv = std::move(qkv);
      lc->att_out = att_out;
      lc->x_mid = x;
    }

    layer_norm<Scalar>(x, crow(params_, blk.ln2_g, d), crow(params_, blk.ln2_b, d), ln, lc ? &lc->mean2 : nullptr,
                       lc ? &lc->rstd2 : nullptr);
    linear<Scalar>(ln, cmat(params_, blk.fc_w, 4 * d, d), crow(params_, blk.fc_b, 4 * d), fc_pre);
    gelu<Scalar>(fc_pre, fc_act);
    linear<Scalar>(fc_act, cmat(params_, blk.fc2_w, d, 4 * d), crow(params_, blk.fc2_b, d), tmp);
    x += tmp;
    if (lc) {
      lc->ln2 = ln;
      lc->fc_pre = std::move(fc_pre);
      lc->fc_act = std::move(fc_act);
    }
  }

  Mat lnf;
  layer_norm<Scalar>(x, crow(params_, layout_.lnf_g, d), crow(params_, layout_.lnf_b, d), lnf,
                     cache ? &cache->meanf : nullptr, cache ? &cache->rstdf : nullptr);
  Mat logits(n, static_cast<Eigen::Index>(v));
  logits.noalias() = lnf * cmat(params_, layout_.head_w, v, d).transpose();
  if (cache) {
    cache->x_out = std::move(x);
    cache->lnf = std::move(lnf);
  }
  return logits;
}

template <typename Scalar>
typename Transformer<Scalar>::Mat Transformer<Scalar>::logits(std::span<const TokenId> tokens, int batch,
                                                              int len) const {
  return forward(tokens, batch, len, nullptr);
}

namespace {

/// Per-row log-softmax NLL of the label; optionally writes softmax into probs.
template <typename Mat>
double row_nll(const Mat& logits, Eigen::Index i, TokenId label) {
  const auto mx = logits.row(i).maxCoeff();
  const double lse = static_cast<double>(mx) +
                     std::log(static_cast<double>((logits.row(i).array() - mx).exp().sum()));
  return lse - static_cast<double>(logits(i, label));
}

}  // namespace

template <typename Scalar>
std::pair<double, std::size_t> Transformer<Scalar>::nll_sum(const LmBatch& batch) const {
  const Mat lg = forward(batch.tokens, batch.batch, batch.len, nullptr);
  double total = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < lg.rows(); ++i) {
    if (batch.mask[static_cast<std::size_t>(i)]) {
      total += row_nll(lg, i, batch.labels[static_cast<std::size_t>(i)]);
      ++count;
    }
  }
  return {total, count};
}

template <typename Scalar>
double Transformer<Scalar>::loss(const LmBatch& batch) const {
  const auto [total, count] = nll_sum(batch);
  if (count == 0) {
    throw ValidationError("loss: every position is masked");
  }
  return total / static_cast<double>(count);
}

template <typename Scalar>
double Transformer<Scalar>::forward_backward(const LmBatch& batch) {
  const std::size_t count = batch.counted();
  if (count == 0) {
    throw ValidationError("loss: every position is masked");
  }
  Mat lg = forward(batch.tokens, batch.batch, batch.len, &cache_);
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
  const int heads = cfg_.n_heads;
  const int hd = cfg_.d_model / heads;
  const int len = batch.len;
  const auto n = lg.rows();
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(hd));

  std::fill(grads_.begin(), grads_.end(), Scalar(0));

  // Softmax cross-entropy; lg becomes dL/dlogits in place.
  double total = 0.0;
  const Scalar inv_count = Scalar(1) / static_cast<Scalar>(count);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (!batch.mask[si]) {
      lg.row(i).setZero();
      continue;
    }
    total += row_nll(lg, i, batch.labels[si]);
    const Scalar mx = lg.row(i).maxCoeff();
    lg.row(i) = (lg.row(i).array() - mx).exp().matrix();
    lg.row(i) /= lg.row(i).sum();
    lg(i, batch.labels[si]) -= Scalar(1);
    lg.row(i) *= inv_count;
  }

  // Head and final LayerNorm.
  mmat(grads_, layout_.head_w, v, d).noalias() += lg.transpose() * cache_.lnf;
  Mat dlnf = lg * cmat(params_, layout_.head_w, v, d);
  Mat dx = Mat::Zero(n, static_cast<Eigen::Index>(d));
  layer_norm_backward<Scalar>(dlnf, cache_.x_out, cache_.meanf, cache_.rstdf, crow(params_, layout_.lnf_g, d),
                              mrow(grads_, layout_.lnf_g, d), mrow(grads_, layout_.lnf_b, d), dx);

  Mat dact, dln, datt, dqkv;
  for (std::size_t li = layout_.blocks.size(); li-- > 0;) {
    const auto& blk = layout_.blocks[li];
    LayerCache& lc = cache_.layers[li];

    // MLP branch.
    mmat(grads_, blk.fc2_w, d, 4 * d).noalias() += dx.transpose() * lc.fc_act;
    mrow(grads_, blk.fc2_b, d) += dx.colwise().sum();
    dact.noalias() = dx * cmat(params_, blk.fc2_w, d, 4 * d);
    gelu_backward<Scalar>(lc.fc_pre, dact);
    mmat(grads_, blk.fc_w, 4 * d, d).noalias() += dact.transpose() * lc.ln2;
    mrow(grads_, blk.fc_b, 4 * d) += dact.colwise().sum();
    dln.noalias() = dact * cmat(params_, blk.fc_w, 4 * d, d);
    layer_norm_backward<Scalar>(dln, lc.x_mid, lc.mean2, lc.rstd2, crow(params_, blk.ln2_g, d),
                                mrow(grads_, blk.ln2_g, d), mrow(grads_, blk.ln2_b, d), dx);

    // Attention branch.
    mmat(grads_, blk.proj_w, d, d).noalias() += dx.transpose() * lc.att_out;
    mrow(grads_, blk.proj_b, d) += dx.colwise().sum();
    datt.noalias() = dx * cmat(params_, blk.proj_w, d, d);

    dqkv.setZero(n, static_cast<Eigen::Index>(3 * d));
    std::vector<Scalar> dp(static_cast<std::size_t>(len));
    for (int b = 0; b < batch.batch; ++b) {
      for (int h = 0; h < heads; ++h) {
        const Eigen::Index qc = h * hd;
        const Eigen::Index kc = static_cast<Eigen::Index>(d) + h * hd;
        const Eigen::Index vc = 2 * static_cast<Eigen::Index>(d) + h * hd;
        for (int t = 0; t < len; ++t) {
          const Eigen::Index rt = b * len + t;
          const Scalar* p = &lc.probs[static_cast<std::size_t>(((b * heads + h) * len + t) * len)];
          Scalar pdp = 0;
          for (int s = 0; s <= t; ++s) {
            const Eigen::Index rs = b * len + s;
            dp[static_cast<std::size_t>(s)] = datt.row(rt).segment(qc, hd).dot(lc.qkv.row(rs).segment(vc, hd));
            pdp += p[s] * dp[static_cast<std::size_t>(s)];
            dqkv.row(rs).segment(vc, hd) += p[s] * datt.row(rt).segment(qc, hd);
          }
          for (int s = 0; s <= t; ++s) {
            const Eigen::Index rs = b * len + s;
            const Scalar ds = p[s] * (dp[static_cast<std::size_t>(s)] - pdp) * scale;
            dqkv.row(rt).segment(qc, hd) += ds * lc.qkv.row(rs).segment(kc, hd);
            dqkv.row(rs).segment(kc, hd) += ds * lc.qkv.row(rt).segment(qc, hd);
          }
        }
      }
    }
    mmat(grads_, blk.qkv_w, 3 * d, d).noalias() += dqkv.transpose() * lc.ln1;
    mrow(grads_, blk.qkv_b, 3 * d) += dqkv.colwise().sum();
    dln.noalias() = dqkv * cmat(params_, blk.qkv_w, 3 * d, d);
    layer_norm_backward<Scalar>(dln, lc.x_in, lc.mean1, lc.rstd1, crow(params_, blk.ln1_g, d),
                                mrow(grads_, blk.ln1_g, d), mrow(grads_, blk.ln1_b, d), dx);
  }

  auto dwte = mmat(grads_, layout_.wte, v, d);
  auto dwpe = mmat(grads_, layout_.wpe, static_cast<std::size_t>(cfg_.ctx_len), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dwte.row(batch.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    dwpe.row(i % len) += dx.row(i);
  }
  return total / static_cast<double>(count);
}

template class Transformer<float>;
template class Transformer<double>;

AdamW::AdamW(const TrainConfig& cfg, const ParamLayout& layout)
    : cfg_(cfg), decay_(layout.total, 0), m_(layout.total, 0.0F), v_(layout.total, 0.0F) {
  for (const auto& [b, e] : layout.decay_ranges) {
    std::fill(decay_.begin() + static_cast<std::ptrdiff_t>(b), decay_.begin() + static_cast<std::ptrdiff_t>(e), 1);
  }
}

void AdamW::step(std::span<float> params, std::span<const float> grads) {
  ++t_;
  double scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (float g : grads) {
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) {
      scale = cfg_.grad_clip / (norm + 1e-6);
    }
  }
  const auto lr = static_cast<float>(cfg_.lr);
  const auto b1 = static_cast<float>(cfg_.beta1);
  const auto b2 = static_cast<float>(cfg_.beta2);
  const auto eps = static_cast<float>(cfg_.eps);
  const auto decay = static_cast<float>(cfg_.lr * cfg_.weight_decay);
  const auto bc1 = static_cast<float>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const auto bc2_sqrt = static_cast<float>(std::sqrt(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_))));
  const auto step_size = lr / bc1;
  const auto gscale = static_cast<float>(scale);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float g = grads[i] * gscale;
    if (decay_[i]) {
      params[i] -= decay * params[i];
    }
    m_[i] = b1 * m_[i] + (1.0F - b1) * g;
    v_[i] = b2 * v_[i] + (1.0F - b2) * g * g;
    params[i] -= step_size * m_[i] / (std::sqrt(v_[i]) / bc2_sqrt + eps);
  }
}

}  // namespace ordlab
