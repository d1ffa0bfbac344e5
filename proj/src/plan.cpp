#include "ordlab/plan.hpp"

#include "ordlab/error.hpp"

namespace ordlab {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::None: return "none";
    case Estimator::JointSource: return "joint";
    case Estimator::FactoredSum: return "factored";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "none") return Estimator::None;
  if (name == "joint" || name == "JointSource") return Estimator::JointSource;
  if (name == "factored" || name == "FactoredSum") return Estimator::FactoredSum;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

void OrderingPlan::validate() const {
  if (perm.empty()) {
    throw ValidationError("plan has no positions");
  }
  std::vector<bool> seen(perm.size(), false);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) {
      throw ValidationError("plan perm is not a permutation");
    }
    seen[p] = true;
  }
}

nlohmann::json to_json(const OrderingPlan& plan) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& row : plan.step_scores) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) {
      r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    }
    scores.push_back(std::move(r));
  }
  return {{"task_name", plan.task_name},
          {"estimator", to_string(plan.estimator)},
          {"perm", plan.perm},
          {"step_scores", std::move(scores)}};
}

OrderingPlan plan_from_json(const nlohmann::json& j) {
  OrderingPlan plan;
  try {
    plan.task_name = j.value("task_name", std::string{});
    plan.estimator = parse_estimator(j.value("estimator", std::string("none")));
    plan.perm = j.at("perm").get<std::vector<std::size_t>>();
    for (const auto& row : j.value("step_scores", nlohmann::json::array())) {
      std::vector<std::optional<double>> r;
      for (const auto& v : row) {
        r.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
      }
      plan.step_scores.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed plan JSON: ") + e.what());
  }
  plan.validate();
  return plan;
}

std::string describe(const OrderingPlan& plan, const std::vector<std::string>& labels) {
  std::string out;
  for (auto p : plan.perm) {
    out += p < labels.size() ? labels[p] : "C" + std::to_string(p + 1);
  }
  return out;
}

}  // namespace ordlab
