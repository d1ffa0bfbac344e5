#pragma once

#include <span>

#include "ordlab/dataio.hpp"
#include "ordlab/plan.hpp"

namespace ordlab {

OrderingPlan identity_plan(std::size_t length);
OrderingPlan reverse_plan(std::size_t length);
/// The plan that undoes `plan` when applied after it.
OrderingPlan inverse_plan(const OrderingPlan& plan);

/// output[k] = target[perm[k]].
TokenSeq apply_plan(std::span<const TokenId> target, const OrderingPlan& plan);
/// output[perm[k]] = predicted[k]; inverse of apply_plan.
TokenSeq restore_output(std::span<const TokenId> predicted, const OrderingPlan& plan);

/// Permutes every target row and the target labels; tags the task name with
/// the order, e.g. "Addition3[C4C3C2C1]".
SeqDataset apply_to_dataset(const SeqDataset& dataset, const OrderingPlan& plan);

/// Every permutation of 0..n-1 in lexicographic order.
std::vector<OrderingPlan> all_plans(std::size_t length);

}  // namespace ordlab
