#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include <nlohmann/json.hpp>

#include "ordlab/dataio.hpp"

namespace ordlab {

enum class TaskKind { Addition3, Multiplication2, Multiplication3, Log4, Gcd3, ChickenRabbit2, SyntheticMLC };

struct TaskSpec {
  TaskKind kind = TaskKind::Addition3;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  /// Keep '+', '×', '=', '.' etc. as tokens (fine-tuning format). Off for
  /// the plain-digit format.
  bool with_operators = false;
  /// SyntheticMLC only: force the last label column to a constant.
  bool constant_label = false;
};

std::string_view to_string(TaskKind kind);
/// Accepts the enum spelling ("Addition3") or the CLI spelling ("add3").
TaskKind parse_task_kind(std::string_view name);

/// Number of distinct operand tuples the task can draw from.
std::uint64_t instance_space(TaskKind kind);

/// {"kind", "count", "seed", "with_operators", "constant_label"}; count >= 1 is checked.
nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);

SeqDataset generate(const TaskSpec& spec);

SeqDataset gen_addition(const TaskSpec& spec);
SeqDataset gen_multiplication(const TaskSpec& spec);
SeqDataset gen_logarithm(const TaskSpec& spec);
SeqDataset gen_gcd(const TaskSpec& spec);
SeqDataset gen_chicken_rabbit(const TaskSpec& spec);

/// Synthetic multi-label classification with a planted dependency graph.
///
/// Source: 8 feature tokens f0..f9 drawn uniformly. Targets are four binary
/// label tokens ("no"/"yes"):
///   C2 = [s0 > s1] or (s0 == s1 and s0 odd)     balanced, pure function of s0, s1
///   C1 = C2 and [s2 >= 5]                         depends on C2 plus s2
///   C3 = [s3 >= 7] xor Bernoulli(0.15)            weaker, noisy
///   C4 = [s4 == 9] xor Bernoulli(0.05)            weakest
/// Positions s5..s7 are pure noise. C2 carries the most information about
/// the source under both estimators, so it is the expected first pick.
SeqDataset gen_synthetic_mlc(const TaskSpec& spec);

/// One row of an arithmetic task in the plain-digit format. Operands are the
/// task's inputs: (A, B) for the two-operand tasks, (A) for Log4, and
/// (heads, legs) for ChickenRabbit2, which throws when no nonnegative integer
/// solution exists.
SeqExample make_example(TaskKind kind, std::int64_t a, std::int64_t b = 0);

/// Re-evaluates the planted MLC rule on a source row, ignoring the noise
/// bits (so C3/C4 may disagree with the stored labels).
std::array<int, 4> mlc_noiseless_labels(std::span<const TokenId> source);

/// Parses a run of digit tokens (ids equal digit values) as a base-10 number.
std::int64_t digits_value(std::span<const TokenId> digits);

}  // namespace ordlab
