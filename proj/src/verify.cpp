#include "ordlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "ordlab/bigram.hpp"
#include "ordlab/error.hpp"
#include "ordlab/mi.hpp"
#include "ordlab/permute.hpp"
#include "ordlab/rng.hpp"
#include "ordlab/synth.hpp"
#include "ordlab/taskgen.hpp"
#include "ordlab/tinylm.hpp"

namespace ordlab {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// MI by a direct double sum over the support, with its own counting.
double mi_double_sum(const std::vector<TokenId>& x, const std::vector<TokenId>& y) {
  std::map<std::pair<TokenId, TokenId>, double> pxy;
  std::map<TokenId, double> px;
  std::map<TokenId, double> py;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    pxy[{x[i], y[i]}] += 1.0 / n;
    px[x[i]] += 1.0 / n;
    py[y[i]] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [a, pa] : px) {
    for (const auto& [b, pb] : py) {
      auto it = pxy.find({a, b});
      if (it != pxy.end()) {
        mi += it->second * std::log(it->second / (pa * pb));
      }
    }
  }
  return mi;
}

void suite_mi(std::vector<CheckResult>& out) {
  {
    Rng rng(101);
    double worst = 0.0;
    double worst_sym = 0.0;
    double worst_id = 0.0;
    for (int t = 0; t < 200; ++t) {
      const auto vx = static_cast<int>(rng.uniform_int(1, 8));
      const auto vy = static_cast<int>(rng.uniform_int(1, 8));
      const auto n = static_cast<std::size_t>(rng.uniform_int(1, 200));
      std::vector<TokenId> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<TokenId>(rng.index(static_cast<std::size_t>(vx)));
        y[i] = static_cast<TokenId>(rng.index(static_cast<std::size_t>(vy)));
      }
      const double mi = mi_exact(std::span<const TokenId>(x), std::span<const TokenId>(y)).value;
      worst = std::max(worst, std::abs(mi - mi_double_sum(x, y)));
      worst_sym = std::max(worst_sym, std::abs(mi - mi_exact(std::span<const TokenId>(y), std::span<const TokenId>(x)).value));
      worst_id = std::max(worst_id, std::abs(mi_exact(std::span<const TokenId>(x), std::span<const TokenId>(x)).value - entropy(x)));
    }
    out.push_back({"mi", "mi_exact_vs_double_sum", worst <= 1e-12, "max abs err " + num(worst)});
    out.push_back({"mi", "symmetry_and_identity", worst_sym <= 1e-12 && worst_id <= 1e-12,
                   "symmetry " + num(worst_sym) + ", identity " + num(worst_id)});
  }
  {
    std::vector<TokenId> col(1000);
    for (std::size_t i = 0; i < col.size(); ++i) {
      col[i] = static_cast<TokenId>(i % 10);
    }
    const double h = entropy(col);
    out.push_back({"mi", "uniform_entropy", std::abs(h - std::log(10.0)) <= 1e-12, "H = " + num(h)});
  }
  {
    int first_ok = 0;
    int steps_ok = 0;
    int steps = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const SeqDataset ds = generate({TaskKind::SyntheticMLC, 2000, seed, false, false});
      const OrderingPlan plan = greedy_order(ds, Estimator::FactoredSum);
      first_ok += plan.perm.front() == 1 ? 1 : 0;
      std::vector<std::size_t> chosen;
      for (std::size_t k = 0; k < plan.perm.size(); ++k) {
        std::size_t best = 0;
        double best_v = -1.0;
        for (std::size_t c = 0; c < ds.target_len(); ++c) {
          if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) {
            continue;
          }
          const double v = mi_source_vs_target(ds, chosen, c, Estimator::FactoredSum).value;
          if (v > best_v) {
            best_v = v;
            best = c;
          }
        }
        ++steps;
        steps_ok += best == plan.perm[k] ? 1 : 0;
        chosen.push_back(plan.perm[k]);
      }
    }
    out.push_back({"mi", "greedy_first_pick_planted", first_ok == 5, std::to_string(first_ok) + "/5 pick C2 first"});
    out.push_back({"mi", "greedy_step_equals_exhaustive", steps_ok == steps,
                   std::to_string(steps_ok) + "/" + std::to_string(steps) + " steps"});
  }
  {
    int holds = 0;
    double worst_margin = -1e300;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DpiReport r = dpi_check(random_chain(seed, 6), 20000, seed + 1000);
      holds += r.holds ? 1 : 0;
      worst_margin = std::max(worst_margin, r.mi_it - r.mi_tt);
    }
    out.push_back({"mi", "dpi_random_chains", holds == 20,
                   std::to_string(holds) + "/20 hold, max MI(I;T)-MI(T~;T) " + num(worst_margin)});
  }
}

void suite_permute(std::vector<CheckResult>& out, const VerifyOptions& opts) {
  Rng rng(202);
  std::size_t failures = 0;
  std::size_t total = 0;
  for (std::size_t len = 2; len <= 5; ++len) {
    for (const auto& plan : all_plans(len)) {
      OrderingPlan restore_with = plan;
      if (opts.corrupt_perm) {
        std::swap(restore_with.perm[0], restore_with.perm[1]);
      }
      for (int t = 0; t < 100; ++t) {
        TokenSeq x(len);
        for (auto& v : x) {
          v = static_cast<TokenId>(rng.index(10));
        }
        // Distinct symbols make every position observable.
        if (t == 0) {
          for (std::size_t i = 0; i < len; ++i) {
            x[i] = static_cast<TokenId>(i);
          }
        }
        ++total;
        if (restore_output(apply_plan(x, plan), restore_with) != x) {
          ++failures;
        }
      }
    }
  }
  out.push_back({"permute", "round_trip_all_plans", failures == 0,
                 std::to_string(failures) + " failures in " + std::to_string(total)});

  std::size_t inverse_bad = 0;
  for (std::size_t len = 1; len <= 5; ++len) {
    for (const auto& plan : all_plans(len)) {
      inverse_bad += inverse_plan(inverse_plan(plan)).perm == plan.perm ? 0 : 1;
    }
  }
  out.push_back({"permute", "inverse_involution", inverse_bad == 0, std::to_string(inverse_bad) + " failures"});

  const SeqDataset ds = generate({TaskKind::Addition3, 200, 3, false, false});
  const SeqDataset rev = apply_to_dataset(ds, reverse_plan(4));
  bool rows_ok = true;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    TokenSeq expect(ds.examples[i].target.rbegin(), ds.examples[i].target.rend());
    rows_ok = rows_ok && rev.examples[i].target == expect && rev.examples[i].source == ds.examples[i].source;
  }
  out.push_back({"permute", "reverse_dataset_rows", rows_ok, "200 addition rows"});
}

void suite_bigram(std::vector<CheckResult>& out) {
  CollocateCorpusSpec spec;
  spec.n_documents = 100;
  const CollocateCorpus corpus = make_collocate_corpus(spec);
  const PlantedSelectionReport sel = planted_selection(corpus, BigramTrainOptions{});
  out.push_back({"bigram", "planted_collocate_selected", sel.hit_rate() >= 0.95,
                 std::to_string(sel.hits) + "/" + std::to_string(sel.sentences_with_collocate)});

  const Preprocessed pre = preprocess(corpus.documents);
  const BigramModel model = train_bigram(pre, BigramTrainOptions{});
  const AugmentResult aug = augment_corpus(model, pre);
  bool strip_ok = true;
  bool mask_ok = true;
  std::size_t plain_labels = 0;
  std::size_t aug_labels = 0;
  for (const auto& s : aug.sentences) {
    strip_ok = strip_ok && strip_augmentation(s) == s.original;
    mask_ok = mask_ok && std::count(s.loss_mask.begin(), s.loss_mask.end(), 0) == 4;
    const LmSequence a = to_lm_sequence(s);
    const LmSequence p = plain_lm_sequence(s.original);
    aug_labels += count_labels(std::span<const LmSequence>(&a, 1));
    plain_labels += count_labels(std::span<const LmSequence>(&p, 1));
  }
  out.push_back({"bigram", "augment_strip_round_trip", strip_ok, std::to_string(aug.sentences.size()) + " sentences"});
  out.push_back({"bigram", "mask_accounting", mask_ok && plain_labels == aug_labels,
                 "unmasked plain " + std::to_string(plain_labels) + ", augmented " + std::to_string(aug_labels)});
  const bool jsonl_ok = augmented_from_jsonl(augmented_to_jsonl(aug)).sentences == aug.sentences;
  out.push_back({"bigram", "augmented_jsonl_round_trip", jsonl_ok, ""});

  double lo = 1.0;
  double hi = 0.0;
  for (TokenId s = 0; s < static_cast<TokenId>(model.vocab_size()); s += 7) {
    for (TokenId t = 0; t < static_cast<TokenId>(model.vocab_size()); t += 5) {
      const double p = joint_prob(model, s, t);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
  }
  out.push_back({"bigram", "joint_prob_open_unit_interval", lo > 0.0 && hi < 1.0,
                 "range [" + num(lo) + ", " + num(hi) + "]"});
}

void suite_tinylm(std::vector<CheckResult>& out) {
  const GradCheckReport gc = grad_check(grad_check_config(), 1e-4);
  out.push_back({"tinylm", "grad_check", gc.passed, "max rel err " + num(gc.max_rel_error)});

  ModelConfig cfg = grad_check_config();
  Transformer<double> model(cfg);
  model.init(5);
  Rng rng(303);
  const int len = cfg.ctx_len;
  std::vector<TokenId> tokens(static_cast<std::size_t>(len));
  for (auto& t : tokens) {
    t = static_cast<TokenId>(rng.index(static_cast<std::size_t>(cfg.vocab_size)));
  }
  const auto base = model.logits(tokens, 1, len);
  bool causal = true;
  double worst_norm = 0.0;
  for (int p = 0; p < len; ++p) {
    auto perturbed = tokens;
    perturbed[static_cast<std::size_t>(p)] = (perturbed[static_cast<std::size_t>(p)] + 1) % cfg.vocab_size;
    const auto lg = model.logits(perturbed, 1, len);
    for (int q = 0; q < p; ++q) {
      causal = causal && (lg.row(q).array() == base.row(q).array()).all();
    }
  }
  for (Eigen::Index r = 0; r < base.rows(); ++r) {
    const double m = base.row(r).maxCoeff();
    const double z = (base.row(r).array() - m).exp().sum();
    worst_norm = std::max(worst_norm, std::abs(((base.row(r).array() - m).exp() / z).sum() - 1.0));
  }
  out.push_back({"tinylm", "causality", causal, "positions " + std::to_string(len)});
  out.push_back({"tinylm", "softmax_normalized", worst_norm <= 1e-6, "max |sum-1| " + num(worst_norm)});

  ModelConfig full;
  full.vocab_size = 10;
  Transformer<float> big(full);
  big.init(1);
  const SeqDataset ds = generate({TaskKind::Addition3, 64, 9, false, false});
  std::vector<LmSequence> rows;
  for (const auto& ex : ds.examples) {
    rows.push_back(arithmetic_sequence(ex));
  }
  const double loss = big.loss(make_batch(rows));
  const double rel = std::abs(loss - std::log(10.0)) / std::log(10.0);
  out.push_back({"tinylm", "initial_loss_near_log_vocab", rel <= 0.05, "loss " + num(loss) + ", rel " + num(rel)});
}

}  // namespace

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::Mi: return "mi";
    case Suite::Permute: return "permute";
    case Suite::Bigram: return "bigram";
    case Suite::Tinylm: return "tinylm";
    case Suite::All: return "all";
  }
  return "?";
}

Suite parse_suite(std::string_view name) {
  for (Suite s : {Suite::Mi, Suite::Permute, Suite::Bigram, Suite::Tinylm, Suite::All}) {
    if (to_string(s) == name) {
      return s;
    }
  }
  throw ValidationError("unknown suite '" + std::string(name) + "'");
}

bool VerifyReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport verify(Suite suite, const VerifyOptions& opts) {
  VerifyReport rep;
  rep.suite = std::string(to_string(suite));
  const bool all = suite == Suite::All;
  if (all || suite == Suite::Mi) suite_mi(rep.checks);
  if (all || suite == Suite::Permute) suite_permute(rep.checks, opts);
  if (all || suite == Suite::Bigram) suite_bigram(rep.checks);
  if (all || suite == Suite::Tinylm) suite_tinylm(rep.checks);
  return rep;
}

nlohmann::json to_json(const VerifyReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"suite", c.suite}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return {{"suite", report.suite}, {"passed", report.passed()}, {"checks", checks}};
}

}  // namespace ordlab
