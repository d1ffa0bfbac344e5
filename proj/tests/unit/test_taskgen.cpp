#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include <gtest/gtest.h>

#include "ordlab/error.hpp"
#include "ordlab/mi.hpp"
#include "ordlab/taskgen.hpp"

using namespace ordlab;

namespace {

TaskSpec spec(TaskKind kind, std::size_t count, std::uint64_t seed = 3) {
  TaskSpec s;
  s.kind = kind;
  s.count = count;
  s.seed = seed;
  return s;
}

std::int64_t field(const TokenSeq& seq, std::size_t offset, std::size_t width) {
  return digits_value(std::span<const TokenId>(seq).subspan(offset, width));
}

/// floor(1000 log10 a) in long double; only trusted away from integer boundaries.
std::int64_t log_milli_reference(std::int64_t a) {
  return static_cast<std::int64_t>(std::floor(1000.0L * std::log10(static_cast<long double>(a))));
}

}  // namespace

TEST(MakeExample, AdditionCarriesIntoFourDigits) {
  EXPECT_EQ(make_example(TaskKind::Addition3, 379, 841).target, (TokenSeq{1, 2, 2, 0}));
  EXPECT_EQ(make_example(TaskKind::Addition3, 379, 841).source, (TokenSeq{3, 7, 9, 8, 4, 1}));
  EXPECT_EQ(make_example(TaskKind::Addition3, 0, 0).target, (TokenSeq{0, 0, 0, 0}));
}

TEST(MakeExample, Multiplication) {
  EXPECT_EQ(make_example(TaskKind::Multiplication2, 79, 24).target, (TokenSeq{1, 8, 9, 6}));
  const auto ex = make_example(TaskKind::Multiplication2, 35, 7);
  EXPECT_EQ(ex.source, (TokenSeq{3, 5, 0, 7}));
  EXPECT_EQ(ex.target, (TokenSeq{0, 2, 4, 5}));
  EXPECT_EQ(make_example(TaskKind::Multiplication3, 999, 999).target, (TokenSeq{9, 9, 8, 0, 0, 1}));
}

TEST(MakeExample, Logarithm) {
  EXPECT_EQ(make_example(TaskKind::Log4, 1234).target, (TokenSeq{3, 0, 9, 1}));
  EXPECT_EQ(make_example(TaskKind::Log4, 1000).target, (TokenSeq{3, 0, 0, 0}));
  EXPECT_EQ(make_example(TaskKind::Log4, 9999).target, (TokenSeq{3, 9, 9, 9}));
}

TEST(MakeExample, Gcd) {
  EXPECT_EQ(make_example(TaskKind::Gcd3, 896, 128).target, (TokenSeq{1, 2, 8}));
  EXPECT_EQ(make_example(TaskKind::Gcd3, 500, 500).target, (TokenSeq{5, 0, 0}));
  EXPECT_EQ(make_example(TaskKind::Gcd3, 997, 991).target, (TokenSeq{0, 0, 1}));
}

TEST(MakeExample, ChickenRabbit) {
  EXPECT_EQ(make_example(TaskKind::ChickenRabbit2, 10, 28).target, (TokenSeq{0, 6, 0, 4}));
  EXPECT_EQ(make_example(TaskKind::ChickenRabbit2, 2, 4).target, (TokenSeq{0, 2, 0, 0}));
  EXPECT_THROW((void)make_example(TaskKind::ChickenRabbit2, 10, 27), ValidationError);
  EXPECT_THROW((void)make_example(TaskKind::ChickenRabbit2, 10, 50), ValidationError);
}

TEST(MakeExample, RejectsOutOfRangeOperands) {
  EXPECT_THROW((void)make_example(TaskKind::Addition3, 1000, 0), ValidationError);
  EXPECT_THROW((void)make_example(TaskKind::Multiplication2, 100, 1), ValidationError);
  EXPECT_THROW((void)make_example(TaskKind::Log4, 999), ValidationError);
  EXPECT_THROW((void)make_example(TaskKind::Gcd3, 99, 100), ValidationError);
  EXPECT_THROW((void)make_example(TaskKind::SyntheticMLC, 1, 1), ValidationError);
}

TEST(GenAddition, EveryRowAdds) {
  const auto ds = gen_addition(spec(TaskKind::Addition3, 1000));
  ASSERT_EQ(ds.size(), 1000u);
  EXPECT_EQ(ds.source_len(), 6u);
  EXPECT_EQ(ds.target_len(), 4u);
  EXPECT_EQ(ds.vocab.size(), 10u);
  for (const auto& ex : ds.examples) {
    const auto a = field(ex.source, 0, 3);
    const auto b = field(ex.source, 3, 3);
    ASSERT_EQ(field(ex.target, 0, 4), a + b);
    ASSERT_EQ(ex, make_example(TaskKind::Addition3, a, b));
  }
}

TEST(GenAddition, RowsAreDistinct) {
  const auto ds = gen_addition(spec(TaskKind::Addition3, 5000));
  std::set<TokenSeq> sources;
  for (const auto& ex : ds.examples) {
    sources.insert(ex.source);
  }
  EXPECT_EQ(sources.size(), ds.size());
}

TEST(GenAddition, OperatorFormat) {
  auto s = spec(TaskKind::Addition3, 20);
  s.with_operators = true;
  const auto ds = gen_addition(s);
  EXPECT_EQ(ds.source_len(), 8u);
  const auto plus = ds.vocab.id_of("+");
  const auto eq = ds.vocab.id_of("=");
  for (const auto& ex : ds.examples) {
    EXPECT_EQ(ex.source[3], plus);
    EXPECT_EQ(ex.source[7], eq);
    EXPECT_EQ(field(ex.target, 0, 4), field(ex.source, 0, 3) + field(ex.source, 4, 3));
  }
}

TEST(GenMultiplication, EveryRowMultiplies) {
  for (auto kind : {TaskKind::Multiplication2, TaskKind::Multiplication3}) {
    const auto ds = gen_multiplication(spec(kind, 1000));
    const std::size_t w = kind == TaskKind::Multiplication2 ? 2 : 3;
    EXPECT_EQ(ds.target_len(), 2 * w);
    for (const auto& ex : ds.examples) {
      const auto a = field(ex.source, 0, w);
      const auto b = field(ex.source, w, w);
      ASSERT_EQ(field(ex.target, 0, 2 * w), a * b);
      ASSERT_EQ(ex, make_example(kind, a, b));
    }
  }
}

TEST(GenMultiplication, FullSpaceWhenCountEqualsInstanceSpace) {
  const auto ds = gen_multiplication(spec(TaskKind::Multiplication2, 10000));
  std::set<TokenSeq> sources;
  for (const auto& ex : ds.examples) {
    sources.insert(ex.source);
  }
  EXPECT_EQ(sources.size(), 10000u);
}

TEST(GenLogarithm, MatchesFloorOfLog) {
  const auto ds = gen_logarithm(spec(TaskKind::Log4, 9000));
  std::size_t compared = 0;
  for (const auto& ex : ds.examples) {
    const auto a = field(ex.source, 0, 4);
    const auto got = field(ex.target, 0, 4);
    ASSERT_EQ(ex, make_example(TaskKind::Log4, a));
    // Away from a rounding boundary the long double reference is exact.
    const long double scaled = 1000.0L * std::log10(static_cast<long double>(a));
    if (scaled - std::floor(scaled) > 1e-9L && std::ceil(scaled) - scaled > 1e-9L) {
      ASSERT_EQ(got, log_milli_reference(a)) << "a=" << a;
      ++compared;
    }
  }
  EXPECT_GT(compared, 8900u);
}

TEST(GenLogarithm, OperatorFormatInsertsPoint) {
  auto s = spec(TaskKind::Log4, 5);
  s.with_operators = true;
  const auto ds = gen_logarithm(s);
  EXPECT_EQ(ds.target_len(), 5u);
  for (const auto& ex : ds.examples) {
    EXPECT_EQ(ex.target[1], ds.vocab.id_of("."));
  }
}

TEST(GenGcd, MatchesEuclid) {
  const auto ds = gen_gcd(spec(TaskKind::Gcd3, 1000));
  for (const auto& ex : ds.examples) {
    auto a = field(ex.source, 0, 3);
    auto b = field(ex.source, 3, 3);
    ASSERT_GE(a, 100);
    ASSERT_GE(b, 100);
    const auto expected_ex = make_example(TaskKind::Gcd3, a, b);
    while (b != 0) {
      a = std::exchange(b, a % b);
    }
    ASSERT_EQ(field(ex.target, 0, 3), a);
    ASSERT_EQ(ex, expected_ex);
  }
}

TEST(GenChickenRabbit, SolvesTheLinearSystem) {
  const auto ds = gen_chicken_rabbit(spec(TaskKind::ChickenRabbit2, 650));
  for (const auto& ex : ds.examples) {
    const auto heads = field(ex.source, 0, 2);
    const auto legs = field(ex.source, 2, 2);
    const auto x = field(ex.target, 0, 2);
    const auto y = field(ex.target, 2, 2);
    ASSERT_EQ(x + y, heads);
    ASSERT_EQ(2 * x + 4 * y, legs);
    ASSERT_EQ(ex, make_example(TaskKind::ChickenRabbit2, heads, legs));
  }
}

TEST(GenSyntheticMlc, LabelsFollowThePlantedRule) {
  const auto ds = gen_synthetic_mlc(spec(TaskKind::SyntheticMLC, 5000));
  const auto yes = ds.vocab.id_of("yes");
  std::size_t c3_flips = 0;
  std::size_t c4_flips = 0;
  for (const auto& ex : ds.examples) {
    const auto& s = ex.source;
    const int c2 = (s[0] > s[1] || (s[0] == s[1] && s[0] % 2 == 1)) ? 1 : 0;
    const int c1 = c2 && s[2] >= 5;
    ASSERT_EQ(ex.target[1] == yes, c2 == 1);
    ASSERT_EQ(ex.target[0] == yes, c1 == 1);
    c3_flips += (ex.target[2] == yes) != (s[3] >= 7);
    c4_flips += (ex.target[3] == yes) != (s[4] == 9);
  }
  EXPECT_NEAR(static_cast<double>(c3_flips) / 5000.0, 0.15, 0.02);
  EXPECT_NEAR(static_cast<double>(c4_flips) / 5000.0, 0.05, 0.015);
}

TEST(GenSyntheticMlc, ConstantLabelColumnHasZeroMi) {
  auto s = spec(TaskKind::SyntheticMLC, 2000);
  s.constant_label = true;
  const auto ds = gen_synthetic_mlc(s);
  const auto col = ds.target_column(3);
  EXPECT_EQ(std::set<TokenId>(col.begin(), col.end()).size(), 1u);
  for (auto est : {Estimator::JointSource, Estimator::FactoredSum}) {
    EXPECT_EQ(mi_source_vs_target(ds, {}, 3, est).value, 0.0);
  }
}

TEST(Generate, IsDeterministicPerSeed) {
  for (auto kind : {TaskKind::Addition3, TaskKind::Multiplication2, TaskKind::Log4, TaskKind::Gcd3,
                    TaskKind::ChickenRabbit2, TaskKind::SyntheticMLC}) {
    const auto a = generate(spec(kind, 300, 9));
    const auto b = generate(spec(kind, 300, 9));
    const auto c = generate(spec(kind, 300, 10));
    EXPECT_EQ(to_jsonl(a), to_jsonl(b)) << to_string(kind);
    EXPECT_NE(to_jsonl(a), to_jsonl(c)) << to_string(kind);
  }
}

TEST(Generate, RejectsZeroCountAndWrongKind) {
  EXPECT_THROW((void)generate(spec(TaskKind::Addition3, 0)), ValidationError);
  EXPECT_THROW((void)gen_addition(spec(TaskKind::Gcd3, 5)), ValidationError);
}

TEST(Generate, OversizedCountSamplesWithReplacement) {
  const auto ds = generate(spec(TaskKind::ChickenRabbit2, 2000));
  EXPECT_EQ(ds.size(), 2000u);
  EXPECT_EQ(instance_space(TaskKind::ChickenRabbit2), 650u);
}

TEST(TaskSpecJson, RoundTripsAndParsesAliases) {
  TaskSpec s = spec(TaskKind::Gcd3, 42, 7);
  s.with_operators = true;
  const auto back = task_spec_from_json(to_json(s));
  EXPECT_EQ(back.kind, s.kind);
  EXPECT_EQ(back.count, 42u);
  EXPECT_EQ(back.seed, 7u);
  EXPECT_TRUE(back.with_operators);
  EXPECT_EQ(parse_task_kind("mul2"), TaskKind::Multiplication2);
  EXPECT_EQ(parse_task_kind("Log4"), TaskKind::Log4);
  EXPECT_THROW((void)parse_task_kind("div9"), ValidationError);
  EXPECT_THROW((void)task_spec_from_json({{"kind", "add3"}, {"count", 0}}), ValidationError);
  EXPECT_THROW((void)task_spec_from_json({{"count", 3}}), ValidationError);
}
