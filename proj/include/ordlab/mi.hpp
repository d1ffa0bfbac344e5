#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ordlab/dataio.hpp"
#include "ordlab/plan.hpp"

namespace ordlab {

/// Plug-in mutual information, in nats.
struct MIEstimate {
  double value = 0.0;
  Estimator estimator = Estimator::JointSource;
  std::size_t n_samples = 0;
};

/// Maps each distinct tuple to a dense code (first-seen order).
std::vector<std::int64_t> encode_tuples(std::span<const TokenSeq> tuples);

/// Plug-in entropy -sum p log p over the empirical distribution.
double entropy(std::span<const TokenId> column);
double entropy_codes(std::span<const std::int64_t> codes);

/// Plug-in MI from the empirical joint counts of (x, y).
MIEstimate mi_exact(std::span<const std::int64_t> x, std::span<const std::int64_t> y);
MIEstimate mi_exact(std::span<const TokenSeq> x, std::span<const TokenId> y);
MIEstimate mi_exact(std::span<const TokenId> x, std::span<const TokenId> y);

/// MI between the source block (plus the target columns in `extra_source_cols`,
/// already placed in the source) and target column `target_index`.
///
/// JointSource treats the whole augmented row as one variable. FactoredSum
/// sums pairwise MI of each augmented source position with the target.
MIEstimate mi_source_vs_target(const SeqDataset& dataset, std::span<const std::size_t> extra_source_cols,
                               std::size_t target_index, Estimator estimator);

/// Greedy information-rich ordering: repeatedly pick the remaining target
/// column with maximal MI against the growing source; ties (scores within a
/// relative 1e-12) go to the lowest index.
OrderingPlan greedy_order(const SeqDataset& dataset, Estimator estimator);

/// A discrete Markov chain I -> T~ -> T given by a prior over I and two
/// row-stochastic transition matrices.
struct MarkovChain {
  std::vector<double> prior;
  std::vector<std::vector<double>> first;   // P(T~ | I)
  std::vector<std::vector<double>> second;  // P(T | T~)

  /// Throws ValidationError when a row is not a distribution or shapes disagree.
  void validate() const;
  std::size_t max_support() const;
};

struct DpiReport {
  double mi_it = 0.0;  // MI(I; T)
  double mi_tt = 0.0;  // MI(T~; T)
  double epsilon = 0.0;
  bool holds = false;
};

/// Samples the chain and checks MI(I;T) <= MI(T~;T) + 3 sqrt(|V|^2 / n),
/// |V| being the largest support in the chain.
DpiReport dpi_check(const MarkovChain& chain, std::size_t n_samples, std::uint64_t seed);

/// Random chain with every support size drawn from [2, max_support].
MarkovChain random_chain(std::uint64_t seed, std::size_t max_support);

}  // namespace ordlab
