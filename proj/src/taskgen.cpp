#include "ordlab/taskgen.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ordlab/error.hpp"
#include "ordlab/rng.hpp"

namespace ordlab {

namespace {

struct OperandField {
  int offset;
  int width;
};

std::vector<std::string> digit_symbols() {
  std::vector<std::string> s;
  for (int d = 0; d < 10; ++d) {
    s.push_back(std::to_string(d));
  }
  return s;
}

void push_digits(TokenSeq& out, std::int64_t value, int width) {
  const auto start = out.size();
  out.resize(start + static_cast<std::size_t>(width));
  for (int i = width - 1; i >= 0; --i) {
    out[start + static_cast<std::size_t>(i)] = static_cast<TokenId>(value % 10);
    value /= 10;
  }
  if (value != 0) {
    throw std::logic_error("value does not fit in digit width");
  }
}

std::vector<std::string> c_labels(std::size_t n) {
  std::vector<std::string> labels;
  for (std::size_t i = 1; i <= n; ++i) {
    labels.push_back("C" + std::to_string(i));
  }
  return labels;
}

void check_spec(const TaskSpec& spec, std::initializer_list<TaskKind> allowed) {
  if (spec.count < 1) {
    throw ValidationError("task count must be >= 1");
  }
  for (TaskKind k : allowed) {
    if (k == spec.kind) {
      return;
    }
  }
  throw ValidationError("generator does not handle task kind " + std::string(to_string(spec.kind)));
}

/// Draws `count` codes from [0, space). Without replacement when count <= space.
std::vector<std::uint64_t> sample_codes(Rng& rng, std::uint64_t space, std::size_t count) {
  std::vector<std::uint64_t> codes;
  codes.reserve(count);
  if (count > space) {
    for (std::size_t i = 0; i < count; ++i) {
      codes.push_back(static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(space) - 1)));
    }
    return codes;
  }
  if (2 * count > space) {
    std::vector<std::uint64_t> all(space);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + rng.index(all.size() - i);
      std::swap(all[i], all[j]);
    }
    all.resize(count);
    return all;
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  while (codes.size() < count) {
    const auto c = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(space) - 1));
    if (seen.insert(c).second) {
      codes.push_back(c);
    }
  }
  return codes;
}

nlohmann::json make_meta(const TaskSpec& spec, const std::vector<OperandField>& operands) {
  nlohmann::json fields = nlohmann::json::array();
  for (const auto& f : operands) {
    fields.push_back({f.offset, f.width});
  }
  return {{"kind", to_string(spec.kind)},
          {"seed", spec.seed},
          {"with_operators", spec.with_operators},
          {"operands", fields}};
}

/// Shared shape for the two-operand digit tasks: "A op B =" -> zero-padded C.
template <typename Fn>
SeqDataset two_operand_task(const TaskSpec& spec, std::int64_t lo, std::int64_t hi, int width,
                            const std::string& op, int out_width, Fn&& compute) {
  Rng rng(spec.seed);
  const auto range = static_cast<std::uint64_t>(hi - lo + 1);
  const auto codes = sample_codes(rng, range * range, spec.count);

  SeqDataset ds;
  ds.task_name = std::string(to_string(spec.kind));
  auto symbols = digit_symbols();
  if (spec.with_operators) {
    symbols.push_back(op);
    symbols.push_back("=");
  }
  ds.vocab = Vocab(symbols);
  ds.target_labels = c_labels(static_cast<std::size_t>(out_width));
  std::vector<OperandField> fields{{0, width}, {spec.with_operators ? width + 1 : width, width}};
  ds.field_meta = make_meta(spec, fields);

  ds.examples.reserve(codes.size());
  for (auto code : codes) {
    const auto a = lo + static_cast<std::int64_t>(code / range);
    const auto b = lo + static_cast<std::int64_t>(code % range);
    SeqExample ex;
    push_digits(ex.source, a, width);
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of(op));
    }
    push_digits(ex.source, b, width);
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of("="));
    }
    push_digits(ex.target, compute(a, b), out_width);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

/// floor(1000 * log10(a)), corrected so the result is exact for integers.
std::int64_t truncated_log10_milli(std::int64_t a) {
  auto c = static_cast<std::int64_t>(std::floor(std::log10(static_cast<long double>(a)) * 1000.0L));
  auto pow_ok = [a](std::int64_t m) {
    // 10^(m/1000) <= a  <=>  10^m <= a^1000, compared in log space with a guard.
    return std::pow(10.0L, static_cast<long double>(m) / 1000.0L) <= static_cast<long double>(a);
  };
  while (pow_ok(c + 1)) {
    ++c;
  }
  while (!pow_ok(c)) {
    --c;
  }
  return c;
}

}  // namespace

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Addition3: return "Addition3";
    case TaskKind::Multiplication2: return "Multiplication2";
    case TaskKind::Multiplication3: return "Multiplication3";
    case TaskKind::Log4: return "Log4";
    case TaskKind::Gcd3: return "Gcd3";
    case TaskKind::ChickenRabbit2: return "ChickenRabbit2";
    case TaskKind::SyntheticMLC: return "SyntheticMLC";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  static const std::pair<std::string_view, TaskKind> aliases[] = {
      {"add3", TaskKind::Addition3},         {"mul2", TaskKind::Multiplication2},
      {"mul3", TaskKind::Multiplication3},   {"log4", TaskKind::Log4},
      {"gcd3", TaskKind::Gcd3},              {"cr2", TaskKind::ChickenRabbit2},
      {"mlc", TaskKind::SyntheticMLC},
  };
  for (const auto& [alias, kind] : aliases) {
    if (name == alias || name == to_string(kind)) {
      return kind;
    }
  }
  throw ValidationError("unknown task kind '" + std::string(name) + "'");
}

std::uint64_t instance_space(TaskKind kind) {
  switch (kind) {
    case TaskKind::Addition3: return 1000ULL * 1000ULL;
    case TaskKind::Multiplication2: return 100ULL * 100ULL;
    case TaskKind::Multiplication3: return 1000ULL * 1000ULL;
    case TaskKind::Log4: return 9000ULL;
    case TaskKind::Gcd3: return 900ULL * 900ULL;
    case TaskKind::ChickenRabbit2: return 650ULL;
    case TaskKind::SyntheticMLC: return 100000000ULL;
  }
  return 0;
}

nlohmann::json to_json(const TaskSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"count", spec.count},
          {"seed", spec.seed},
          {"with_operators", spec.with_operators},
          {"constant_label", spec.constant_label}};
}

TaskSpec task_spec_from_json(const nlohmann::json& j) {
  TaskSpec spec;
  try {
    spec.kind = parse_task_kind(j.at("kind").get<std::string>());
    spec.count = j.at("count").get<std::size_t>();
    spec.seed = j.value("seed", spec.seed);
    spec.with_operators = j.value("with_operators", spec.with_operators);
    spec.constant_label = j.value("constant_label", spec.constant_label);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("task spec: ") + e.what());
  }
  if (spec.count < 1) {
    throw ValidationError("task spec: count must be >= 1");
  }
  return spec;
}

SeqDataset generate(const TaskSpec& spec) {
  switch (spec.kind) {
    case TaskKind::Addition3: return gen_addition(spec);
    case TaskKind::Multiplication2:
    case TaskKind::Multiplication3: return gen_multiplication(spec);
    case TaskKind::Log4: return gen_logarithm(spec);
    case TaskKind::Gcd3: return gen_gcd(spec);
    case TaskKind::ChickenRabbit2: return gen_chicken_rabbit(spec);
    case TaskKind::SyntheticMLC: return gen_synthetic_mlc(spec);
  }
  throw ValidationError("unknown task kind");
}

SeqDataset gen_addition(const TaskSpec& spec) {
  check_spec(spec, {TaskKind::Addition3});
  return two_operand_task(spec, 0, 999, 3, "+", 4, [](std::int64_t a, std::int64_t b) { return a + b; });
}

SeqDataset gen_multiplication(const TaskSpec& spec) {
  check_spec(spec, {TaskKind::Multiplication2, TaskKind::Multiplication3});
  const bool two = spec.kind == TaskKind::Multiplication2;
  return two_operand_task(spec, 0, two ? 99 : 999, two ? 2 : 3, "×", two ? 4 : 6,
                          [](std::int64_t a, std::int64_t b) { return a * b; });
}

SeqDataset gen_gcd(const TaskSpec& spec) {
  check_spec(spec, {TaskKind::Gcd3});
  return two_operand_task(spec, 100, 999, 3, "gcd", 3, [](std::int64_t a, std::int64_t b) { return std::gcd(a, b); });
}

SeqDataset gen_logarithm(const TaskSpec& spec) {
  check_spec(spec, {TaskKind::Log4});
  Rng rng(spec.seed);
  const auto codes = sample_codes(rng, instance_space(spec.kind), spec.count);

  SeqDataset ds;
  ds.task_name = std::string(to_string(spec.kind));
  auto symbols = digit_symbols();
  if (spec.with_operators) {
    symbols.insert(symbols.end(), {"log", "=", "."});
  }
  ds.vocab = Vocab(symbols);
  ds.target_labels = spec.with_operators ? std::vector<std::string>{"C1", ".", "C2", "C3", "C4"} : c_labels(4);
  ds.field_meta = make_meta(spec, {{spec.with_operators ? 1 : 0, 4}});

  for (auto code : codes) {
    const auto a = 1000 + static_cast<std::int64_t>(code);
    SeqExample ex;
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of("log"));
    }
    push_digits(ex.source, a, 4);
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of("="));
    }
    const auto milli = truncated_log10_milli(a);
    push_digits(ex.target, milli, 4);
    if (spec.with_operators) {
      ex.target.insert(ex.target.begin() + 1, ds.vocab.id_of("."));
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

SeqDataset gen_chicken_rabbit(const TaskSpec& spec) {
  check_spec(spec, {TaskKind::ChickenRabbit2});
  // Feasible (chickens, rabbits): heads = x + y <= 99 and legs = 2x + 4y <= 99.
  std::vector<std::pair<int, int>> feasible;
  for (int y = 0; y <= 99; ++y) {
    for (int x = 0; x <= 99; ++x) {
      if (x + y <= 99 && 2 * x + 4 * y <= 99) {
        feasible.emplace_back(x, y);
      }
    }
  }
  Rng rng(spec.seed);
  const auto codes = sample_codes(rng, feasible.size(), spec.count);

  SeqDataset ds;
  ds.task_name = std::string(to_string(spec.kind));
  auto symbols = digit_symbols();
  if (spec.with_operators) {
    symbols.insert(symbols.end(), {"CR", ",", "="});
  }
  ds.vocab = Vocab(symbols);
  ds.target_labels = c_labels(4);
  ds.field_meta = make_meta(spec, {{spec.with_operators ? 1 : 0, 2}, {spec.with_operators ? 4 : 2, 2}});

  for (auto code : codes) {
    const auto [x, y] = feasible[code];
    SeqExample ex;
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of("CR"));
    }
    push_digits(ex.source, x + y, 2);
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of(","));
    }
    push_digits(ex.source, 2 * x + 4 * y, 2);
    if (spec.with_operators) {
      ex.source.push_back(ds.vocab.id_of("="));
    }
    push_digits(ex.target, x, 2);
    push_digits(ex.target, y, 2);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::array<int, 4> mlc_noiseless_labels(std::span<const TokenId> s) {
  if (s.size() < 5) {
    throw ValidationError("MLC source row too short");
  }
  const int c2 = (s[0] > s[1] || (s[0] == s[1] && s[0] % 2 == 1)) ? 1 : 0;
  const int c1 = c2 & (s[2] >= 5 ? 1 : 0);
  const int c3 = s[3] >= 7 ? 1 : 0;
  const int c4 = s[4] == 9 ? 1 : 0;
  return {c1, c2, c3, c4};
}

SeqDataset gen_synthetic_mlc(const TaskSpec& spec) {
  check_spec(spec, {TaskKind::SyntheticMLC});
  constexpr int kSourceLen = 8;
  Rng rng(spec.seed);

  SeqDataset ds;
  ds.task_name = std::string(to_string(spec.kind));
  std::vector<std::string> symbols;
  for (int i = 0; i < 10; ++i) {
    symbols.push_back("f" + std::to_string(i));
  }
  symbols.insert(symbols.end(), {"no", "yes"});
  ds.vocab = Vocab(symbols);
  ds.target_labels = c_labels(4);
  ds.field_meta = {{"kind", to_string(spec.kind)},
                   {"seed", spec.seed},
                   {"constant_label", spec.constant_label},
                   {"rule", "C2=[s0>s1 or (s0==s1 and s0 odd)]; C1=C2 and [s2>=5]; "
                            "C3=[s3>=7] xor B(0.15); C4=[s4==9] xor B(0.05)"}};
  const TokenId no = ds.vocab.id_of("no");
  const TokenId yes = ds.vocab.id_of("yes");

  ds.examples.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    SeqExample ex;
    for (int p = 0; p < kSourceLen; ++p) {
      ex.source.push_back(static_cast<TokenId>(rng.uniform_int(0, 9)));
    }
    auto labels = mlc_noiseless_labels(ex.source);
    labels[2] ^= rng.bernoulli(0.15) ? 1 : 0;
    labels[3] ^= rng.bernoulli(0.05) ? 1 : 0;
    if (spec.constant_label) {
      labels[3] = 0;
    }
    for (int l : labels) {
      ex.target.push_back(l ? yes : no);
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

SeqExample make_example(TaskKind kind, std::int64_t a, std::int64_t b) {
  auto in_range = [](std::int64_t v, std::int64_t lo, std::int64_t hi) {
    if (v < lo || v > hi) {
      throw ValidationError("operand " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    }
  };
  SeqExample ex;
  switch (kind) {
    case TaskKind::Addition3:
      in_range(a, 0, 999);
      in_range(b, 0, 999);
      push_digits(ex.source, a, 3);
      push_digits(ex.source, b, 3);
      push_digits(ex.target, a + b, 4);
      break;
    case TaskKind::Multiplication2:
    case TaskKind::Multiplication3: {
      const bool two = kind == TaskKind::Multiplication2;
      in_range(a, 0, two ? 99 : 999);
      in_range(b, 0, two ? 99 : 999);
      push_digits(ex.source, a, two ? 2 : 3);
      push_digits(ex.source, b, two ? 2 : 3);
      push_digits(ex.target, a * b, two ? 4 : 6);
      break;
    }
    case TaskKind::Gcd3:
      in_range(a, 100, 999);
      in_range(b, 100, 999);
      push_digits(ex.source, a, 3);
      push_digits(ex.source, b, 3);
      push_digits(ex.target, std::gcd(a, b), 3);
      break;
    case TaskKind::Log4:
      in_range(a, 1000, 9999);
      push_digits(ex.source, a, 4);
      push_digits(ex.target, truncated_log10_milli(a), 4);
      break;
    case TaskKind::ChickenRabbit2: {
      in_range(a, 0, 99);
      in_range(b, 0, 99);
      const std::int64_t twice_x = 4 * a - b;
      const std::int64_t twice_y = b - 2 * a;
      if (twice_x < 0 || twice_y < 0 || twice_x % 2 != 0) {
        throw ValidationError("no nonnegative integer solution for heads " + std::to_string(a) + ", legs " +
                              std::to_string(b));
      }
      push_digits(ex.source, a, 2);
      push_digits(ex.source, b, 2);
      push_digits(ex.target, twice_x / 2, 2);
      push_digits(ex.target, twice_y / 2, 2);
      break;
    }
    case TaskKind::SyntheticMLC:
      throw ValidationError("make_example: SyntheticMLC rows are random, use gen_synthetic_mlc");
  }
  return ex;
}

std::int64_t digits_value(std::span<const TokenId> digits) {
  std::int64_t v = 0;
  for (TokenId d : digits) {
    if (d < 0 || d > 9) {
      throw ValidationError("token is not a digit: " + std::to_string(d));
    }
    v = v * 10 + d;
  }
  return v;
}

}  // namespace ordlab
