#include "ordlab/mi.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ordlab/error.hpp"
#include "ordlab/rng.hpp"

namespace ordlab {

namespace {

constexpr std::size_t kDenseJointLimit = std::size_t{1} << 22;

/// Relabels values to 0..k-1 in ascending value order; returns k.
std::size_t densify(std::span<const std::int64_t> in, std::vector<std::int64_t>& out) {
  std::vector<std::int64_t> uniq(in.begin(), in.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::lower_bound(uniq.begin(), uniq.end(), in[i]) - uniq.begin();
  }
  return uniq.size();
}

std::vector<std::int64_t> widen(std::span<const TokenId> col) { return {col.begin(), col.end()}; }

double entropy_from_counts(std::span<const std::int64_t> counts, std::size_t n) {
  const double nn = static_cast<double>(n);
  double h = 0.0;
  for (auto c : counts) {
    if (c > 0) {
      const double p = static_cast<double>(c) / nn;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

std::vector<std::int64_t> encode_tuples(std::span<const TokenSeq> tuples) {
  std::map<TokenSeq, std::int64_t> codes;
  std::vector<std::int64_t> out;
  out.reserve(tuples.size());
  for (const auto& t : tuples) {
    auto [it, inserted] = codes.emplace(t, static_cast<std::int64_t>(codes.size()));
    out.push_back(it->second);
  }
  return out;
}

double entropy_codes(std::span<const std::int64_t> codes) {
  if (codes.empty()) {
    throw ValidationError("entropy of an empty column");
  }
  std::vector<std::int64_t> dense;
  const std::size_t k = densify(codes, dense);
  std::vector<std::int64_t> counts(k, 0);
  for (auto c : dense) {
    ++counts[static_cast<std::size_t>(c)];
  }
  return entropy_from_counts(counts, codes.size());
}

double entropy(std::span<const TokenId> column) {
  const auto wide = widen(column);
  return entropy_codes(wide);
}

MIEstimate mi_exact(std::span<const std::int64_t> x, std::span<const std::int64_t> y) {
  if (x.size() != y.size()) {
    throw ValidationError("mi_exact: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.empty()) {
    throw ValidationError("mi_exact: empty columns");
  }
  const std::size_t n = x.size();
  std::vector<std::int64_t> dx;
  std::vector<std::int64_t> dy;
  const std::size_t kx = densify(x, dx);
  const std::size_t ky = densify(y, dy);

  std::vector<std::int64_t> cx(kx, 0);
  std::vector<std::int64_t> cy(ky, 0);
  for (std::size_t i = 0; i < n; ++i) {
    ++cx[static_cast<std::size_t>(dx[i])];
    ++cy[static_cast<std::size_t>(dy[i])];
  }

  // Joint cells in ascending (x, y) order, so the float sum has a fixed order.
  std::vector<std::pair<std::int64_t, std::int64_t>> cells;  // (joint code, count)
  if (kx * ky <= kDenseJointLimit) {
    std::vector<std::int64_t> joint(kx * ky, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++joint[static_cast<std::size_t>(dx[i]) * ky + static_cast<std::size_t>(dy[i])];
    }
    for (std::size_t c = 0; c < joint.size(); ++c) {
      if (joint[c] > 0) {
        cells.emplace_back(static_cast<std::int64_t>(c), joint[c]);
      }
    }
  } else {
    std::vector<std::int64_t> codes(n);
    for (std::size_t i = 0; i < n; ++i) {
      codes[i] = dx[i] * static_cast<std::int64_t>(ky) + dy[i];
    }
    std::sort(codes.begin(), codes.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && codes[j] == codes[i]) {
        ++j;
      }
      cells.emplace_back(codes[i], static_cast<std::int64_t>(j - i));
      i = j;
    }
  }

  const double nn = static_cast<double>(n);
  double mi = 0.0;
  for (const auto& [code, c] : cells) {
    const auto xi = static_cast<std::size_t>(code / static_cast<std::int64_t>(ky));
    const auto yi = static_cast<std::size_t>(code % static_cast<std::int64_t>(ky));
    const double pxy = static_cast<double>(c) / nn;
    mi += pxy * std::log(static_cast<double>(c) * nn /
                         (static_cast<double>(cx[xi]) * static_cast<double>(cy[yi])));
  }
  return {std::max(0.0, mi), Estimator::JointSource, n};
}

MIEstimate mi_exact(std::span<const TokenSeq> x, std::span<const TokenId> y) {
  const auto xc = encode_tuples(x);
  const auto yc = widen(y);
  return mi_exact(std::span<const std::int64_t>(xc), std::span<const std::int64_t>(yc));
}

MIEstimate mi_exact(std::span<const TokenId> x, std::span<const TokenId> y) {
  const auto xc = widen(x);
  const auto yc = widen(y);
  return mi_exact(std::span<const std::int64_t>(xc), std::span<const std::int64_t>(yc));
}

MIEstimate mi_source_vs_target(const SeqDataset& dataset, std::span<const std::size_t> extra_source_cols,
                               std::size_t target_index, Estimator estimator) {
  const std::size_t l2 = dataset.target_len();
  if (dataset.examples.empty()) {
    throw ValidationError("empty dataset");
  }
  if (target_index >= l2) {
    throw ValidationError("target index " + std::to_string(target_index) + " out of range");
  }
  std::vector<bool> used(l2, false);
  for (auto e : extra_source_cols) {
    if (e >= l2) {
      throw ValidationError("extra source column " + std::to_string(e) + " out of range");
    }
    if (e == target_index) {
      throw ValidationError("target index is already part of the source");
    }
    if (used[e]) {
      throw ValidationError("duplicate extra source column");
    }
    used[e] = true;
  }

  const auto target = dataset.target_column(target_index);
  MIEstimate est;
  est.estimator = estimator;
  est.n_samples = dataset.size();

  switch (estimator) {
    case Estimator::JointSource: {
      std::vector<TokenSeq> rows;
      rows.reserve(dataset.size());
      for (const auto& ex : dataset.examples) {
        TokenSeq r = ex.source;
        for (auto e : extra_source_cols) {
          r.push_back(ex.target[e]);
        }
        rows.push_back(std::move(r));
      }
      est.value = mi_exact(std::span<const TokenSeq>(rows), std::span<const TokenId>(target)).value;
      break;
    }
    case Estimator::FactoredSum: {
      double total = 0.0;
      for (std::size_t p = 0; p < dataset.source_len(); ++p) {
        total += mi_exact(dataset.source_column(p), target).value;
      }
      for (auto e : extra_source_cols) {
        total += mi_exact(dataset.target_column(e), target).value;
      }
      est.value = total;
      break;
    }
    case Estimator::None:
      throw ValidationError("mi_source_vs_target needs an estimator");
  }
  return est;
}

namespace {
constexpr double kTieTolerance = 1e-12;
}  // namespace

OrderingPlan greedy_order(const SeqDataset& dataset, Estimator estimator) {
  dataset.validate();
  const std::size_t l2 = dataset.target_len();
  OrderingPlan plan;
  plan.estimator = estimator;
  plan.task_name = dataset.task_name;

  std::vector<bool> chosen(l2, false);
  for (std::size_t step = 0; step < l2; ++step) {
    std::vector<std::optional<double>> scores(l2);
    std::size_t best = l2;
    double best_value = -1.0;
    for (std::size_t j = 0; j < l2; ++j) {
      if (chosen[j]) {
        continue;
      }
      const double v = mi_source_vs_target(dataset, plan.perm, j, estimator).value;
      scores[j] = v;
      // Scores that agree up to summation-order rounding are ties.
      if (best == l2 || v > best_value + kTieTolerance * std::max(1.0, std::abs(best_value))) {
        best_value = v;
        best = j;
      }
    }
    chosen[best] = true;
    plan.perm.push_back(best);
    plan.step_scores.push_back(std::move(scores));
  }
  return plan;
}

void MarkovChain::validate() const {
  auto check_rows = [](const std::vector<std::vector<double>>& rows, std::size_t expected_rows,
                       const char* name) {
    if (rows.size() != expected_rows) {
      throw ValidationError(std::string(name) + ": row count does not match the previous support");
    }
    std::size_t width = rows.empty() ? 0 : rows.front().size();
    for (const auto& r : rows) {
      if (r.size() != width || width == 0) {
        throw ValidationError(std::string(name) + ": ragged transition matrix");
      }
      double s = 0.0;
      for (double p : r) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw ValidationError(std::string(name) + ": negative or non-finite probability");
        }
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) {
        throw ValidationError(std::string(name) + ": row does not sum to 1");
      }
    }
  };
  check_rows({prior}, 1, "prior");
  check_rows(first, prior.size(), "first");
  check_rows(second, first.front().size(), "second");
}

std::size_t MarkovChain::max_support() const {
  return std::max({prior.size(), first.empty() ? 0 : first.front().size(),
                   second.empty() ? 0 : second.front().size()});
}

namespace {

std::size_t sample_row(Rng& rng, const std::vector<double>& row) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    acc += row[i];
    if (u < acc) {
      return i;
    }
  }
  // Rounding left u above the cumulative sum; take the last positive cell.
  for (std::size_t i = row.size(); i-- > 0;) {
    if (row[i] > 0.0) {
      return i;
    }
  }
  return row.size() - 1;
}

std::vector<double> dirichlet_row(Rng& rng, std::size_t k) {
  std::vector<double> r(k);
  double s = 0.0;
  for (auto& v : r) {
    double u = rng.uniform01();
    while (u <= 0.0) {
      u = rng.uniform01();
    }
    v = -std::log(u);
    s += v;
  }
  for (auto& v : r) {
    v /= s;
  }
  return r;
}

}  // namespace

DpiReport dpi_check(const MarkovChain& chain, std::size_t n_samples, std::uint64_t seed) {
  chain.validate();
  if (n_samples == 0) {
    throw ValidationError("dpi_check needs at least one sample");
  }
  Rng rng(seed);
  std::vector<std::int64_t> in(n_samples);
  std::vector<std::int64_t> mid(n_samples);
  std::vector<std::int64_t> out(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto a = sample_row(rng, chain.prior);
    const auto b = sample_row(rng, chain.first[a]);
    const auto c = sample_row(rng, chain.second[b]);
    in[i] = static_cast<std::int64_t>(a);
    mid[i] = static_cast<std::int64_t>(b);
    out[i] = static_cast<std::int64_t>(c);
  }
  DpiReport rep;
  rep.mi_it = mi_exact(std::span<const std::int64_t>(in), std::span<const std::int64_t>(out)).value;
  rep.mi_tt = mi_exact(std::span<const std::int64_t>(mid), std::span<const std::int64_t>(out)).value;
  const double v = static_cast<double>(chain.max_support());
  rep.epsilon = 3.0 * std::sqrt(v * v / static_cast<double>(n_samples));
  rep.holds = rep.mi_it <= rep.mi_tt + rep.epsilon;
  return rep;
}

MarkovChain random_chain(std::uint64_t seed, std::size_t max_support) {
  if (max_support < 2) {
    throw ValidationError("random_chain: max_support must be >= 2");
  }
  Rng rng(seed);
  auto size = [&] { return static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(max_support))); };
  const std::size_t ki = size();
  const std::size_t km = size();
  const std::size_t ko = size();
  MarkovChain chain;
  chain.prior = dirichlet_row(rng, ki);
  for (std::size_t i = 0; i < ki; ++i) {
    chain.first.push_back(dirichlet_row(rng, km));
  }
  for (std::size_t i = 0; i < km; ++i) {
    chain.second.push_back(dirichlet_row(rng, ko));
  }
  return chain;
}

}  // namespace ordlab
