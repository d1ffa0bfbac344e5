#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ordlab {

enum class Suite { Mi, Permute, Bigram, Tinylm, All };
std::string_view to_string(Suite s);
Suite parse_suite(std::string_view name);

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;
};

struct VerifyOptions {
  /// Negative control: restore through a plan with two entries swapped.
  bool corrupt_perm = false;
};

/// Runs the oracle checks of one module (or all of them). Sizes are reduced
/// relative to the acceptance tests so a full run takes seconds.
VerifyReport verify(Suite suite, const VerifyOptions& opts = {});

/// {"suite", "passed", "checks": [{"suite", "name", "passed", "detail"}]}
nlohmann::json to_json(const VerifyReport& report);

}  // namespace ordlab
