#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "ordlab/error.hpp"
#include "ordlab/mi.hpp"
#include "ordlab/taskgen.hpp"

using namespace ordlab;

namespace {

/// Sum over every (v, w) in supp(X) x supp(Y) of p(v,w) log(p(v,w) / p(v) p(w)),
/// with each probability found by a fresh scan of the samples.
double mi_double_sum(const std::vector<TokenId>& x, const std::vector<TokenId>& y) {
  const std::set<TokenId> sx(x.begin(), x.end());
  const std::set<TokenId> sy(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (TokenId v : sx) {
    for (TokenId w : sy) {
      double cxy = 0;
      double cx = 0;
      double cy = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        cxy += (x[i] == v && y[i] == w);
        cx += (x[i] == v);
        cy += (y[i] == w);
      }
      if (cxy > 0) {
        mi += (cxy / n) * std::log((cxy / n) / ((cx / n) * (cy / n)));
      }
    }
  }
  return mi;
}

double entropy_oracle(const std::vector<TokenId>& x) {
  std::map<TokenId, double> counts;
  for (TokenId v : x) {
    counts[v] += 1.0;
  }
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double p = c / static_cast<double>(x.size());
    h -= p * std::log(p);
  }
  return h;
}

SeqDataset random_dataset(std::mt19937& gen, std::size_t n, std::size_t l1, std::size_t l2, int vocab) {
  std::uniform_int_distribution<int> pick(0, vocab - 1);
  SeqDataset ds;
  std::vector<std::string> symbols;
  for (int i = 0; i < vocab; ++i) {
    symbols.push_back("v" + std::to_string(i));
  }
  ds.vocab = Vocab(symbols);
  for (std::size_t j = 0; j < l2; ++j) {
    ds.target_labels.push_back("C" + std::to_string(j + 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    SeqExample ex;
    for (std::size_t p = 0; p < l1; ++p) {
      ex.source.push_back(pick(gen));
    }
    // Targets depend on the source through noisy copies so MI values differ.
    for (std::size_t j = 0; j < l2; ++j) {
      const int copy = ex.source[j % l1];
      ex.target.push_back(std::uniform_real_distribution<>(0, 1)(gen) < 0.3 * static_cast<double>(j + 1) / static_cast<double>(l2)
                              ? pick(gen)
                              : copy);
    }
    ds.examples.push_back(ex);
  }
  return ds;
}

TaskSpec mlc_spec(std::uint64_t seed, std::size_t count = 4000) {
  TaskSpec s;
  s.kind = TaskKind::SyntheticMLC;
  s.count = count;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Entropy, ConstantColumnIsZero) {
  const TokenSeq col(50, 4);
  EXPECT_EQ(entropy(col), 0.0);
}

TEST(Entropy, BalancedUniformIsLogK) {
  TokenSeq col;
  for (int r = 0; r < 30; ++r) {
    for (int v = 0; v < 10; ++v) {
      col.push_back(v);
    }
  }
  EXPECT_NEAR(entropy(col), std::log(10.0), 1e-12);
  EXPECT_NEAR(entropy(col), 2.302585, 1e-6);
}

TEST(Entropy, MatchesCountingOracle) {
  std::mt19937 gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(gen() % 8);
    const std::size_t n = 1 + gen() % 200;
    std::vector<TokenId> col(n);
    for (auto& v : col) {
      v = static_cast<TokenId>(gen() % static_cast<unsigned>(k));
    }
    ASSERT_NEAR(entropy(col), entropy_oracle(col), 1e-12);
  }
  EXPECT_THROW((void)entropy(TokenSeq{}), ValidationError);
}

TEST(MiExact, ConstantYIsZero) {
  const TokenSeq x{0, 1, 2, 3, 0, 1};
  const TokenSeq y(6, 7);
  EXPECT_EQ(mi_exact(x, y).value, 0.0);
}

TEST(MiExact, SelfInformationIsEntropy) {
  TokenSeq x;
  for (int r = 0; r < 25; ++r) {
    for (int v = 0; v < 4; ++v) {
      x.push_back(v);
    }
  }
  EXPECT_NEAR(mi_exact(x, x).value, entropy(x), 1e-12);
  EXPECT_NEAR(mi_exact(x, x).value, std::log(4.0), 1e-12);
}

TEST(MiExact, MatchesDoubleSumOnRandomTables) {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 300; ++trial) {
    const unsigned kx = 1 + gen() % 8;
    const unsigned ky = 1 + gen() % 8;
    const std::size_t n = 1 + gen() % 200;
    std::vector<TokenId> x(n);
    std::vector<TokenId> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<TokenId>(gen() % kx);
      // Mix dependent and independent draws.
      y[i] = (gen() % 2) ? static_cast<TokenId>((x[i] * 3 + 1) % ky) : static_cast<TokenId>(gen() % ky);
    }
    const double got = mi_exact(x, y).value;
    ASSERT_NEAR(got, mi_double_sum(x, y), 1e-12) << "trial " << trial;
    ASSERT_NEAR(got, mi_exact(y, x).value, 1e-12);
    ASSERT_GE(got, 0.0);
  }
}

TEST(MiExact, TupleColumnsAreEncodedAsOneVariable) {
  const std::vector<TokenSeq> x{{0, 1}, {1, 0}, {0, 1}, {1, 1}};
  const TokenSeq y{0, 1, 0, 1};
  const auto codes = encode_tuples(x);
  EXPECT_EQ(codes, (std::vector<std::int64_t>{0, 1, 0, 2}));
  const std::vector<TokenId> xc{0, 1, 0, 2};
  EXPECT_NEAR(mi_exact(x, y).value, mi_double_sum(xc, y), 1e-12);
}

TEST(MiExact, LengthMismatchIsRejected) {
  EXPECT_THROW((void)mi_exact(TokenSeq{1, 2}, TokenSeq{1}), ValidationError);
  EXPECT_THROW((void)mi_exact(TokenSeq{}, TokenSeq{}), ValidationError);
}

TEST(MiSourceVsTarget, PlantedLabelDominates) {
  const auto ds = gen_synthetic_mlc(mlc_spec(1));
  for (auto est : {Estimator::JointSource, Estimator::FactoredSum}) {
    const double c2 = mi_source_vs_target(ds, {}, 1, est).value;
    EXPECT_GT(c2, mi_source_vs_target(ds, {}, 2, est).value) << to_string(est);
    EXPECT_GT(c2, mi_source_vs_target(ds, {}, 3, est).value) << to_string(est);
  }
}

TEST(MiSourceVsTarget, DistinctSourcesMakeJointEqualTargetEntropy) {
  const auto ds = gen_multiplication({TaskKind::Multiplication2, 2000, 4, false, false});
  for (std::size_t j = 0; j < ds.target_len(); ++j) {
    EXPECT_NEAR(mi_source_vs_target(ds, {}, j, Estimator::JointSource).value, entropy(ds.target_column(j)), 1e-12);
  }
}

TEST(MiSourceVsTarget, ConstantTargetIsZero) {
  auto s = mlc_spec(2, 1000);
  s.constant_label = true;
  const auto ds = gen_synthetic_mlc(s);
  EXPECT_EQ(mi_source_vs_target(ds, {}, 3, Estimator::JointSource).value, 0.0);
  EXPECT_EQ(mi_source_vs_target(ds, {}, 3, Estimator::FactoredSum).value, 0.0);
}

TEST(MiSourceVsTarget, FactoredSumAddsPairwiseTerms) {
  std::mt19937 gen(8);
  const auto ds = random_dataset(gen, 150, 3, 3, 5);
  const std::vector<std::size_t> extra{2};
  double expected = 0.0;
  for (std::size_t p = 0; p < 3; ++p) {
    expected += mi_double_sum(ds.source_column(p), ds.target_column(0));
  }
  expected += mi_double_sum(ds.target_column(2), ds.target_column(0));
  EXPECT_NEAR(mi_source_vs_target(ds, extra, 0, Estimator::FactoredSum).value, expected, 1e-12);
}

TEST(MiSourceVsTarget, InvalidIndicesAreRejected) {
  const auto ds = gen_synthetic_mlc(mlc_spec(1, 100));
  const std::vector<std::size_t> self{1};
  const std::vector<std::size_t> dup{0, 0};
  const std::vector<std::size_t> oob{9};
  EXPECT_THROW((void)mi_source_vs_target(ds, {}, 4, Estimator::FactoredSum), ValidationError);
  EXPECT_THROW((void)mi_source_vs_target(ds, self, 1, Estimator::FactoredSum), ValidationError);
  EXPECT_THROW((void)mi_source_vs_target(ds, dup, 1, Estimator::FactoredSum), ValidationError);
  EXPECT_THROW((void)mi_source_vs_target(ds, oob, 1, Estimator::FactoredSum), ValidationError);
  EXPECT_THROW((void)mi_source_vs_target(ds, {}, 1, Estimator::None), ValidationError);
}

TEST(GreedyOrder, FirstPickIsPlantedLabel) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto ds = gen_synthetic_mlc(mlc_spec(seed, 2000));
    EXPECT_EQ(greedy_order(ds, Estimator::FactoredSum).perm.front(), 1u) << "seed " << seed;
    EXPECT_EQ(greedy_order(ds, Estimator::JointSource).perm.front(), 1u) << "seed " << seed;
  }
}

TEST(GreedyOrder, SingleTargetIsIdentity) {
  std::mt19937 gen(1);
  const auto ds = random_dataset(gen, 20, 2, 1, 3);
  EXPECT_EQ(greedy_order(ds, Estimator::FactoredSum).perm, (std::vector<std::size_t>{0}));
}

TEST(GreedyOrder, EveryStepIsTheExhaustiveArgmax) {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t l2 = 2 + gen() % 3;
    const std::size_t n = 10 + gen() % 41;
    const auto ds = random_dataset(gen, n, 2 + gen() % 3, l2, 2 + static_cast<int>(gen() % 4));
    for (auto est : {Estimator::JointSource, Estimator::FactoredSum}) {
      const auto plan = greedy_order(ds, est);
      ASSERT_EQ(plan.perm.size(), l2);
      std::vector<std::size_t> prefix;
      for (std::size_t step = 0; step < l2; ++step) {
        std::size_t best = l2;
        double best_v = -1.0;
        for (std::size_t j = 0; j < l2; ++j) {
          if (std::find(prefix.begin(), prefix.end(), j) != prefix.end()) {
            ASSERT_FALSE(plan.step_scores[step][j].has_value());
            continue;
          }
          const double v = mi_source_vs_target(ds, prefix, j, est).value;
          ASSERT_EQ(plan.step_scores[step][j].value(), v);
          if (v > best_v) {
            best_v = v;
            best = j;
          }
        }
        ASSERT_EQ(plan.perm[step], best) << "trial " << trial << " step " << step;
        prefix.push_back(best);
      }
    }
  }
}

TEST(GreedyOrder, TiesGoToLowestIndex) {
  SeqDataset ds;
  ds.vocab = Vocab({"a", "b"});
  ds.target_labels = {"C1", "C2", "C3"};
  for (int i = 0; i < 8; ++i) {
    const TokenId v = i % 2;
    ds.examples.push_back({{v}, {v, v, v}});
  }
  EXPECT_EQ(greedy_order(ds, Estimator::FactoredSum).perm, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Dpi, IdentityChannelsGiveEquality) {
  MarkovChain chain;
  chain.prior = {0.2, 0.3, 0.5};
  chain.first = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  chain.second = chain.first;
  const auto rep = dpi_check(chain, 20000, 3);
  EXPECT_DOUBLE_EQ(rep.mi_it, rep.mi_tt);
  EXPECT_TRUE(rep.holds);
}

TEST(Dpi, IndependentOutputGivesNearZero) {
  MarkovChain chain;
  chain.prior = {0.5, 0.5};
  chain.first = {{0.9, 0.1}, {0.1, 0.9}};
  chain.second = {{0.25, 0.75}, {0.25, 0.75}};
  const auto rep = dpi_check(chain, 100000, 5);
  EXPECT_LT(rep.mi_it, 1e-3);
  EXPECT_LT(rep.mi_tt, 1e-3);
  EXPECT_TRUE(rep.holds);
}

TEST(Dpi, RandomChainsHold) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto chain = random_chain(seed, 6);
    EXPECT_LE(chain.max_support(), 6u);
    EXPECT_TRUE(dpi_check(chain, 20000, seed + 100).holds) << "seed " << seed;
  }
}

TEST(Dpi, InvalidRowsAreRejected) {
  MarkovChain chain;
  chain.prior = {0.5, 0.4};
  chain.first = {{1.0}, {1.0}};
  chain.second = {{1.0}};
  EXPECT_THROW((void)dpi_check(chain, 10, 1), ValidationError);
  chain.prior = {0.5, 0.5};
  chain.first = {{1.0}};
  EXPECT_THROW((void)dpi_check(chain, 10, 1), ValidationError);
  chain.first = {{1.0}, {-0.5, 1.5}};
  EXPECT_THROW((void)dpi_check(chain, 10, 1), ValidationError);
  EXPECT_THROW((void)random_chain(1, 1), ValidationError);
}
