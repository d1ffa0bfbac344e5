#include "ordlab/permute.hpp"

#include <algorithm>
#include <numeric>

#include "ordlab/error.hpp"

namespace ordlab {

namespace {

void check_length(std::size_t got, const OrderingPlan& plan) {
  plan.validate();
  if (got != plan.size()) {
    throw ValidationError("sequence length " + std::to_string(got) + " does not match plan length " +
                          std::to_string(plan.size()));
  }
}

}  // namespace

OrderingPlan identity_plan(std::size_t length) {
  if (length < 1) {
    throw ValidationError("plan length must be >= 1");
  }
  OrderingPlan plan;
  plan.perm.resize(length);
  std::iota(plan.perm.begin(), plan.perm.end(), 0);
  return plan;
}

OrderingPlan reverse_plan(std::size_t length) {
  auto plan = identity_plan(length);
  std::reverse(plan.perm.begin(), plan.perm.end());
  return plan;
}

OrderingPlan inverse_plan(const OrderingPlan& plan) {
  plan.validate();
  OrderingPlan inv;
  inv.perm.resize(plan.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    inv.perm[plan.perm[k]] = k;
  }
  inv.task_name = plan.task_name;
  return inv;
}

TokenSeq apply_plan(std::span<const TokenId> target, const OrderingPlan& plan) {
  check_length(target.size(), plan);
  TokenSeq out(target.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    out[k] = target[plan.perm[k]];
  }
  return out;
}

TokenSeq restore_output(std::span<const TokenId> predicted, const OrderingPlan& plan) {
  check_length(predicted.size(), plan);
  TokenSeq out(predicted.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    out[plan.perm[k]] = predicted[k];
  }
  return out;
}

SeqDataset apply_to_dataset(const SeqDataset& dataset, const OrderingPlan& plan) {
  plan.validate();
  if (dataset.target_len() != plan.size()) {
    throw ValidationError("plan length " + std::to_string(plan.size()) + " does not match target length " +
                          std::to_string(dataset.target_len()));
  }
  SeqDataset out;
  out.vocab = dataset.vocab;
  out.field_meta = dataset.field_meta;
  out.task_name = dataset.task_name + "[" + describe(plan, dataset.target_labels) + "]";
  out.target_labels.resize(plan.size());
  for (std::size_t k = 0; k < plan.size(); ++k) {
    out.target_labels[k] = dataset.target_labels.at(plan.perm[k]);
  }
  out.examples.reserve(dataset.size());
  for (const auto& ex : dataset.examples) {
    out.examples.push_back({ex.source, apply_plan(ex.target, plan)});
  }
  return out;
}

std::vector<OrderingPlan> all_plans(std::size_t length) {
  auto base = identity_plan(length);
  std::vector<OrderingPlan> plans;
  do {
    plans.push_back(base);
  } while (std::next_permutation(base.perm.begin(), base.perm.end()));
  return plans;
}

}  // namespace ordlab
