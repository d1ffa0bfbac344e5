#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ordlab {

enum class Estimator { None, JointSource, FactoredSum };

std::string_view to_string(Estimator e);
/// "joint" | "factored" | "none" (also accepts the enum spelling).
Estimator parse_estimator(std::string_view name);

/// A fixed permutation of target positions. Position k of the reordered
/// sequence holds original index perm[k].
struct OrderingPlan {
  std::vector<std::size_t> perm;
  /// One row per greedy step, one entry per target index; indices already
  /// ordered before that step are empty.
  std::vector<std::vector<std::optional<double>>> step_scores;
  Estimator estimator = Estimator::None;
  std::string task_name;

  std::size_t size() const { return perm.size(); }
  /// Throws ValidationError unless perm is a permutation of 0..size()-1.
  void validate() const;

  bool operator==(const OrderingPlan&) const = default;
};

nlohmann::json to_json(const OrderingPlan& plan);
OrderingPlan plan_from_json(const nlohmann::json& j);

/// "C4C3C2C1"-style rendering of the order using the given labels.
std::string describe(const OrderingPlan& plan, const std::vector<std::string>& labels);

}  // namespace ordlab
