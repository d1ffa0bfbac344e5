#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ordlab/bigram.hpp"
#include "ordlab/plan.hpp"
#include "ordlab/synth.hpp"
#include "ordlab/taskgen.hpp"
#include "ordlab/tinylm.hpp"

namespace ordlab {

/// Strategy names accepted in a config:
///   arithmetic/MLC tasks: plain, reverse, maxmi (= maxmi_factored), maxmi_joint,
///                         maxmi_factored, all_perms
///   text corpora:         plain, maxmi, tfidf, pcond
struct ExperimentConfig {
  /// Exactly one of task / corpus is set.
  std::optional<TaskSpec> task;
  /// Rows held out for evaluation; taken from the end of the generated set.
  std::size_t test_count = 1000;

  std::optional<CollocateCorpusSpec> corpus;
  std::filesystem::path corpus_path;  // text file instead of a generated corpus
  BigramTrainOptions bigram;
  /// Fraction of documents (from the end) held out for perplexity.
  double test_fraction = 0.1;

  std::vector<std::string> strategies;
  ModelConfig model;
  TrainConfig train;
  std::optional<std::int64_t> fixed_iters;
  std::size_t plateau_window = 3;
  double plateau_slope = 2e-5;
  double plateau_fraction = 0.9;
  std::filesystem::path out_dir;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool save_checkpoints = true;

  bool is_text() const { return corpus.has_value() || !corpus_path.empty(); }
  void validate() const;
};

/// Relative paths in the JSON are resolved against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ResultRow {
  std::string strategy;
  std::vector<std::size_t> perm;
  std::uint64_t seed = 0;
  double fixed_iter_accuracy = 0.0;
  double max_accuracy = 0.0;
  std::int64_t plateau_iter = 0;
};

struct TextResultRow {
  std::string strategy;
  std::uint64_t seed = 0;
  double masked_perplexity = 0.0;
  std::size_t eval_labels = 0;
};

struct CellCurve {
  std::string strategy;
  OrderingPlan plan;
  std::uint64_t seed = 0;
  TrainCurve curve;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<CellCurve> curves;
  std::vector<TextResultRow> text_rows;
  std::int64_t fixed_iter = 0;
  std::string best_strategy;
};

/// Accuracy at `iter`, carrying the last evaluated value forward (curves stop
/// early once accuracy reaches 1.0 or patience runs out).
double accuracy_at(const TrainCurve& curve, std::int64_t iter);

/// Per-iteration mean over curves evaluated on a common schedule.
TrainCurve mean_curve(std::span<const TrainCurve> curves);

/// Runs every (strategy, seed) cell and writes results.csv, curves.csv,
/// curves.svg, config.json, plans/ and checkpoints/ under cfg.out_dir.
/// Cells already present under out_dir/cells with an identical setup are
/// reused instead of retrained.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct RankedStrategy {
  std::string strategy;
  std::size_t rank = 0;
  double mean_accuracy = 0.0;
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;
  double mean_plateau_iter = 0.0;
  std::size_t n_rows = 0;
};

/// Sorted by mean fixed-iteration accuracy (descending), ties by mean plateau
/// iteration (earlier first), then by name.
std::vector<RankedStrategy> rank_strategies(std::span<const ResultRow> rows);

std::string results_csv_header();
std::string format_result_row(const ResultRow& row);
std::string results_csv(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);
std::string curves_csv(std::span<const CellCurve> curves);
std::string text_results_csv(std::span<const TextResultRow> rows);

/// Accuracy-vs-iteration line chart, one polyline per strategy (seed mean).
std::string curves_svg(std::span<const CellCurve> curves, std::int64_t fixed_iter, const std::string& title);

}  // namespace ordlab
