// Randomized invariants across modules, plus fuzzing of the text parsers.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "ordlab/bigram.hpp"
#include "ordlab/dataio.hpp"
#include "ordlab/error.hpp"
#include "ordlab/mi.hpp"
#include "ordlab/permute.hpp"
#include "ordlab/synth.hpp"
#include "ordlab/taskgen.hpp"

using namespace ordlab;

namespace {

SeqDataset random_dataset(std::mt19937_64& gen) {
  const std::size_t vocab_size = 2 + gen() % 12;
  const std::size_t l1 = 1 + gen() % 6;
  const std::size_t l2 = 1 + gen() % 5;
  const std::size_t rows = 1 + gen() % 40;
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    symbols.push_back("s" + std::to_string(i));
  }
  SeqDataset ds;
  ds.task_name = "random";
  ds.vocab = Vocab(symbols);
  for (std::size_t j = 0; j < l2; ++j) {
    ds.target_labels.push_back("C" + std::to_string(j + 1));
  }
  auto draw = [&](std::size_t n) {
    TokenSeq s(n);
    for (auto& t : s) {
      t = static_cast<TokenId>(gen() % vocab_size);
    }
    return s;
  };
  for (std::size_t r = 0; r < rows; ++r) {
    ds.examples.push_back({draw(l1), draw(l2)});
  }
  return ds;
}

OrderingPlan random_plan(std::mt19937_64& gen, std::size_t n) {
  OrderingPlan p;
  p.perm.resize(n);
  std::iota(p.perm.begin(), p.perm.end(), std::size_t{0});
  std::shuffle(p.perm.begin(), p.perm.end(), gen);
  return p;
}

/// Parsers may accept or reject damaged input, but only through the
/// library's own error types and never with an invalid result.
template <typename Parse>
void expect_clean_outcome(const std::string& text, Parse parse) {
  try {
    parse(text);
  } catch (const ValidationError&) {
  } catch (const IoError&) {
  } catch (const std::exception& e) {
    ADD_FAILURE() << "unexpected exception type: " << e.what() << "\ninput:\n" << text.substr(0, 400);
  }
}

std::string mutate(std::mt19937_64& gen, std::string text) {
  static const std::string kAlphabet = "{}[]\",:0123456789-. \nabcxyz\\";
  const int edits = 1 + static_cast<int>(gen() % 4);
  for (int e = 0; e < edits && !text.empty(); ++e) {
    const std::size_t pos = gen() % text.size();
    switch (gen() % 4) {
      case 0:
        text[pos] = kAlphabet[gen() % kAlphabet.size()];
        break;
      case 1:
        text.erase(pos, 1 + gen() % 8);
        break;
      case 2:
        text.insert(pos, 1, kAlphabet[gen() % kAlphabet.size()]);
        break;
      default:
        text.resize(pos);
        break;
    }
  }
  return text;
}

}  // namespace

TEST(PermuteProperty, RandomPlansOnRandomDatasets) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const SeqDataset ds = random_dataset(gen);
    const OrderingPlan plan = random_plan(gen, ds.target_len());
    const SeqDataset permuted = apply_to_dataset(ds, plan);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t k = 0; k < plan.perm.size(); ++k) {
        ASSERT_EQ(permuted.examples[i].target[k], ds.examples[i].target[plan.perm[k]]);
      }
      ASSERT_EQ(restore_output(permuted.examples[i].target, plan), ds.examples[i].target);
      ASSERT_EQ(permuted.examples[i].source, ds.examples[i].source);
    }
    const SeqDataset back = apply_to_dataset(permuted, inverse_plan(plan));
    ASSERT_EQ(back.examples, ds.examples);
    ASSERT_EQ(back.target_labels, ds.target_labels);
    ASSERT_EQ(from_jsonl(to_jsonl(permuted)), permuted);
  }
}

TEST(PermuteProperty, ComposingPlansMatchesSequentialApplication) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 7;
    const auto p = random_plan(gen, n);
    const auto q = random_plan(gen, n);
    TokenSeq t(n);
    std::iota(t.begin(), t.end(), 0);
    // Applying p then q gathers t[p[q[k]]].
    OrderingPlan pq;
    for (std::size_t k = 0; k < n; ++k) {
      pq.perm.push_back(p.perm[q.perm[k]]);
    }
    ASSERT_EQ(apply_plan(apply_plan(t, p), q), apply_plan(t, pq));
  }
}

TEST(PlanProperty, JsonAcceptsExactlyPermutations) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + gen() % 6;
    std::vector<std::size_t> perm(n);
    for (auto& v : perm) {
      v = gen() % (n + 1);
    }
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(n);
    std::iota(iota.begin(), iota.end(), std::size_t{0});
    const bool is_perm = sorted == iota;
    const nlohmann::json j = {{"perm", perm}};
    if (is_perm) {
      EXPECT_EQ(plan_from_json(j).perm, perm);
    } else {
      EXPECT_THROW((void)plan_from_json(j), ValidationError) << j.dump();
    }
  }
}

TEST(MiProperty, BoundsAndRelabelingInvariance) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 300;
    const std::size_t kx = 1 + gen() % 8;
    const std::size_t ky = 1 + gen() % 8;
    TokenSeq x(n);
    TokenSeq y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<TokenId>(gen() % kx);
      // Mix a dependent and an independent component.
      y[i] = static_cast<TokenId>(gen() % 2 == 0 ? x[i] % ky : gen() % ky);
    }
    const double mi = mi_exact(std::span<const TokenId>(x), std::span<const TokenId>(y)).value;
    const double hx = entropy(x);
    const double hy = entropy(y);
    EXPECT_GE(mi, -1e-12);
    EXPECT_LE(mi, std::min(hx, hy) + 1e-12);
    EXPECT_NEAR(mi_exact(std::span<const TokenId>(x), std::span<const TokenId>(x)).value, hx, 1e-12);

    // Any bijection of the symbols leaves MI unchanged.
    std::vector<TokenId> relabel(kx);
    std::iota(relabel.begin(), relabel.end(), 100);
    std::shuffle(relabel.begin(), relabel.end(), gen);
    TokenSeq x2(n);
    for (std::size_t i = 0; i < n; ++i) {
      x2[i] = relabel[static_cast<std::size_t>(x[i])];
    }
    EXPECT_NEAR(mi_exact(std::span<const TokenId>(x2), std::span<const TokenId>(y)).value, mi, 1e-12);
  }
}

TEST(MiProperty, GreedyPicksArgmaxAtEveryStep) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 60; ++trial) {
    const SeqDataset ds = random_dataset(gen);
    for (Estimator est : {Estimator::JointSource, Estimator::FactoredSum}) {
      const auto plan = greedy_order(ds, est);
      auto sorted = plan.perm;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 0; k < sorted.size(); ++k) {
        ASSERT_EQ(sorted[k], k);
      }
      ASSERT_EQ(plan.step_scores.size(), ds.target_len());
      // The chosen column has the largest score at every step.
      for (std::size_t step = 0; step < plan.step_scores.size(); ++step) {
        const auto& scores = plan.step_scores[step];
        const double chosen = *scores[plan.perm[step]];
        for (const auto& s : scores) {
          if (s) {
            ASSERT_LE(*s, chosen + 1e-12 * std::max(1.0, std::abs(chosen)));
          }
        }
      }
    }
  }
}

TEST(TaskgenProperty, EveryTaskRoundTripsThroughJsonl) {
  for (auto kind : {TaskKind::Addition3, TaskKind::Multiplication2, TaskKind::Multiplication3, TaskKind::Log4,
                    TaskKind::Gcd3, TaskKind::ChickenRabbit2, TaskKind::SyntheticMLC}) {
    for (bool ops : {false, true}) {
      const auto ds = generate({kind, 64, 9, ops, false});
      ASSERT_NO_THROW(ds.validate()) << to_string(kind);
      ASSERT_EQ(from_jsonl(to_jsonl(ds)), ds) << to_string(kind);
    }
  }
}

TEST(Fuzz, DatasetJsonl) {
  std::mt19937_64 gen(17);
  const std::string valid = to_jsonl(generate({TaskKind::Multiplication2, 6, 1, false, false}));
  for (int trial = 0; trial < 3000; ++trial) {
    expect_clean_outcome(mutate(gen, valid), [](const std::string& t) {
      const SeqDataset ds = from_jsonl(t);
      ds.validate();
    });
  }
}

TEST(Fuzz, AugmentedJsonl) {
  std::mt19937_64 gen(19);
  const std::vector<std::string> docs{"The cats sat. Dogs ran home quickly.", "Birds sang."};
  const auto pre = preprocess(docs);
  BigramTrainOptions opts;
  opts.epochs = 20;
  const std::string valid = augmented_to_jsonl(augment_corpus(train_bigram(pre, opts), pre));
  for (int trial = 0; trial < 3000; ++trial) {
    expect_clean_outcome(mutate(gen, valid), [](const std::string& t) { (void)augmented_from_jsonl(t); });
  }
}

TEST(Fuzz, PlanJson) {
  std::mt19937_64 gen(23);
  OrderingPlan plan;
  plan.perm = {2, 0, 1};
  plan.estimator = Estimator::JointSource;
  plan.step_scores = {{0.1, 0.2, 0.3}, {0.4, std::nullopt, 0.5}, {std::nullopt, std::nullopt, 0.6}};
  const std::string valid = to_json(plan).dump();
  for (int trial = 0; trial < 3000; ++trial) {
    expect_clean_outcome(mutate(gen, valid), [](const std::string& t) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(t);
      } catch (const nlohmann::json::parse_error&) {
        return;  // not JSON at all; the CLI reports this itself
      }
      (void)plan_from_json(j);
    });
  }
}
