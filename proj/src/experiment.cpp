#include "ordlab/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "ordlab/error.hpp"
#include "ordlab/mi.hpp"
#include "ordlab/permute.hpp"

namespace ordlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string> kTaskStrategies = {"plain", "reverse", "maxmi", "maxmi_joint", "maxmi_factored",
                                               "all_perms"};
const std::set<std::string> kTextStrategies = {"plain", "maxmi", "tfidf", "pcond"};
constexpr std::size_t kMaxPermutations = 720;
// Stored with cached cells; bump whenever training numerics change so stale
// cells are retrained instead of reused.
constexpr int kCellVersion = 2;

std::string fmt_double(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join_perm(const std::vector<std::size_t>& perm) {
  std::string out;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out += (i ? " " : "") + std::to_string(perm[i]);
  }
  return out;
}

std::size_t factorial_capped(std::size_t n) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) {
    f *= i;
    if (f > kMaxPermutations) {
      return f;
    }
  }
  return f;
}

std::string cell_key(const std::string& strategy, std::uint64_t seed) {
  return strategy + "__seed" + std::to_string(seed);
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  return p.empty() || p.is_absolute() || base.empty() ? p : base / p;
}

json curve_to_json(const TrainCurve& c) {
  return {{"iters", c.iters}, {"test_accuracy", c.test_accuracy}, {"train_loss", c.train_loss}};
}

TrainCurve curve_from_json(const json& j) {
  TrainCurve c;
  c.iters = j.at("iters").get<std::vector<std::int64_t>>();
  c.test_accuracy = j.at("test_accuracy").get<std::vector<double>>();
  c.train_loss = j.at("train_loss").get<std::vector<double>>();
  return c;
}

json bigram_options_to_json(const BigramTrainOptions& o) {
  return {{"d", o.d}, {"h", o.h}, {"neg", o.negatives_per_positive}, {"epochs", o.epochs}, {"lr", o.lr},
          {"seed", o.seed}};
}

BigramTrainOptions bigram_options_from_json(const json& j) {
  BigramTrainOptions o;
  o.d = j.value("d", o.d);
  o.h = j.value("h", o.h);
  o.negatives_per_positive = j.value("neg", o.negatives_per_positive);
  o.epochs = j.value("epochs", o.epochs);
  o.lr = j.value("lr", o.lr);
  o.seed = j.value("seed", o.seed);
  return o;
}

struct NamedPlan {
  std::string strategy;
  OrderingPlan plan;
};

std::vector<NamedPlan> build_plans(const ExperimentConfig& cfg, const SeqDataset& train_set) {
  const std::size_t l2 = train_set.target_len();
  std::vector<NamedPlan> plans;
  for (const auto& s : cfg.strategies) {
    if (s == "plain") {
      plans.push_back({s, identity_plan(l2)});
    } else if (s == "reverse") {
      plans.push_back({s, reverse_plan(l2)});
    } else if (s == "maxmi" || s == "maxmi_factored") {
      plans.push_back({s, greedy_order(train_set, Estimator::FactoredSum)});
    } else if (s == "maxmi_joint") {
      plans.push_back({s, greedy_order(train_set, Estimator::JointSource)});
    } else if (s == "all_perms") {
      if (factorial_capped(l2) > kMaxPermutations) {
        throw ValidationError("all_perms needs L2! <= 720, got L2 = " + std::to_string(l2));
      }
      for (auto& p : all_plans(l2)) {
        plans.push_back({"perm_" + describe(p, train_set.target_labels), std::move(p)});
      }
    }
  }
  for (auto& p : plans) {
    p.plan.task_name = train_set.task_name;
  }
  return plans;
}

/// Strategy names in first-seen order.
std::vector<std::string> strategy_order(std::span<const CellCurve> curves) {
  std::vector<std::string> names;
  for (const auto& c : curves) {
    if (std::find(names.begin(), names.end(), c.strategy) == names.end()) {
      names.push_back(c.strategy);
    }
  }
  return names;
}

TrainCurve strategy_mean(std::span<const CellCurve> curves, const std::string& strategy) {
  std::vector<TrainCurve> group;
  for (const auto& c : curves) {
    if (c.strategy == strategy) {
      group.push_back(c.curve);
    }
  }
  return mean_curve(group);
}

std::int64_t plateau_or_end(const TrainCurve& curve, const ExperimentConfig& cfg) {
  if (curve.iters.empty()) {
    return 0;
  }
  if (curve.iters.size() < cfg.plateau_window) {
    return curve.iters.back();
  }
  return detect_plateau(curve, cfg.plateau_window, cfg.plateau_slope, cfg.plateau_fraction).iteration;
}

/// Recomputes the summary (best strategy, fixed iteration, rows) from the
/// cells finished so far.
void summarize(const ExperimentConfig& cfg, ExperimentResult& result) {
  result.rows.clear();
  if (result.curves.empty()) {
    return;
  }
  double best_peak = -1.0;
  TrainCurve best_mean;
  for (const auto& name : strategy_order(result.curves)) {
    const TrainCurve mean = strategy_mean(result.curves, name);
    const double peak = *std::max_element(mean.test_accuracy.begin(), mean.test_accuracy.end());
    if (peak > best_peak) {
      best_peak = peak;
      best_mean = mean;
      result.best_strategy = name;
    }
  }
  result.fixed_iter = cfg.fixed_iters ? *cfg.fixed_iters : plateau_or_end(best_mean, cfg);
  for (const auto& c : result.curves) {
    ResultRow row;
    row.strategy = c.strategy;
    row.perm = c.plan.perm;
    row.seed = c.seed;
    row.fixed_iter_accuracy = accuracy_at(c.curve, result.fixed_iter);
    row.max_accuracy = *std::max_element(c.curve.test_accuracy.begin(), c.curve.test_accuracy.end());
    row.plateau_iter = plateau_or_end(c.curve, cfg);
    result.rows.push_back(std::move(row));
  }
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  write_text_file(cfg.out_dir / "results.csv", results_csv(result.rows));
  write_text_file(cfg.out_dir / "curves.csv", curves_csv(result.curves));
  std::string title = cfg.task ? std::string(to_string(cfg.task->kind)) : std::string("experiment");
  write_text_file(cfg.out_dir / "curves.svg", curves_svg(result.curves, result.fixed_iter, title));
  json summary = {{"best_strategy", result.best_strategy}, {"fixed_iter", result.fixed_iter}, {"ranking", json::array()}};
  for (const auto& r : rank_strategies(result.rows)) {
    summary["ranking"].push_back({{"rank", r.rank},
                                  {"strategy", r.strategy},
                                  {"mean_accuracy", r.mean_accuracy},
                                  {"min_accuracy", r.min_accuracy},
                                  {"max_accuracy", r.max_accuracy},
                                  {"mean_plateau_iter", r.mean_plateau_iter},
                                  {"n_rows", r.n_rows}});
  }
  write_text_file(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
}

ExperimentResult run_task_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  const SeqDataset full = generate(*cfg.task);
  if (cfg.test_count >= full.size()) {
    throw ValidationError("test_count must be smaller than task.count");
  }
  const std::size_t n_train = full.size() - cfg.test_count;
  const SeqDataset train_set = slice(full, 0, n_train);
  const SeqDataset test_set = slice(full, n_train, full.size());
  const auto plans = build_plans(cfg, train_set);

  fs::create_directories(cfg.out_dir / "plans");
  fs::create_directories(cfg.out_dir / "cells");
  for (const auto& p : plans) {
    write_text_file(cfg.out_dir / "plans" / (p.strategy + ".json"), to_json(p.plan).dump(2) + "\n");
  }

  ExperimentResult result;
  for (const auto& p : plans) {
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      const json setup = {{"version", kCellVersion}, {"task", to_json(*cfg.task)}, {"test_count", cfg.test_count}, {"model", to_json(cfg.model)},
                          {"train", to_json(tc)},        {"plan", to_json(p.plan)}};
      const fs::path cell_file = cfg.out_dir / "cells" / (cell_key(p.strategy, seed) + ".json");
      CellCurve cell{p.strategy, p.plan, seed, {}};
      bool reused = false;
      if (fs::exists(cell_file)) {
        try {
          const json cached = json::parse(read_text_file(cell_file));
          if (cached.at("setup") == setup) {
            cell.curve = curve_from_json(cached.at("curve"));
            reused = true;
          }
        } catch (const std::exception&) {
          reused = false;
        }
      }
      if (log) {
        *log << (reused ? "reuse " : "train ") << p.strategy << " seed " << seed << '\n' << std::flush;
      }
      if (!reused) {
        ProgressFn progress;
        if (log) {
          progress = [&](std::int64_t it, double loss, double acc) {
            *log << "  " << p.strategy << " seed " << seed << " iter " << it << " loss " << fmt_double(loss, 4)
                 << " acc " << fmt_double(acc, 4) << '\n'
                 << std::flush;
          };
        }
        TrainResult tr = train(cfg.model, tc, train_set, test_set, p.plan, progress);
        cell.curve = tr.curve;
        if (cfg.save_checkpoints) {
          save_checkpoint(tr.checkpoint, cfg.out_dir / "checkpoints" / (cell_key(p.strategy, seed) + ".ckpt"));
        }
        write_text_file(cell_file, json{{"setup", setup}, {"curve", curve_to_json(cell.curve)}}.dump() + "\n");
      }
      result.curves.push_back(std::move(cell));
      summarize(cfg, result);
      write_outputs(cfg, result);
    }
  }
  return result;
}

ExperimentResult run_text_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  std::vector<std::string> documents;
  if (cfg.corpus) {
    documents = make_collocate_corpus(*cfg.corpus).documents;
  } else {
    documents = split_documents(read_text_file(cfg.corpus_path));
  }
  const Preprocessed pre = preprocess(documents);
  const auto n_test =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(pre.n_documents))));
  if (n_test >= pre.n_documents) {
    throw ValidationError("text experiment needs at least one training document");
  }
  const std::size_t first_test_doc = pre.n_documents - n_test;
  if (log) {
    *log << "bigram: " << pre.sentences.size() << " sentences, vocab " << pre.vocab.size() << '\n' << std::flush;
  }
  const BigramModel bigram = train_bigram(pre, cfg.bigram);

  ExperimentResult result;
  fs::create_directories(cfg.out_dir);
  for (const auto& strategy : cfg.strategies) {
    const Selector selector = strategy == "plain" ? Selector::MaxMI : parse_selector(strategy);
    const AugmentResult aug = augment_corpus(bigram, pre, selector);
    std::vector<LmSequence> train_rows;
    std::vector<LmSequence> test_rows;
    for (std::size_t i = 0; i < aug.sentences.size(); ++i) {
      const auto& s = aug.sentences[i];
      auto seq = strategy == "plain" ? plain_lm_sequence(s.original) : to_lm_sequence(s);
      (pre.sentences[i].document >= first_test_doc ? test_rows : train_rows).push_back(std::move(seq));
    }
    if (strategy != "plain") {
      write_text_file(cfg.out_dir / ("augmented_" + strategy + ".jsonl"), augmented_to_jsonl(aug));
    }
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      if (log) {
        *log << "train " << strategy << " seed " << seed << '\n' << std::flush;
      }
      const LmTrainResult lm = train_lm(cfg.model, tc, train_rows, aug.vocab);
      if (cfg.save_checkpoints) {
        save_checkpoint(lm.checkpoint, cfg.out_dir / "checkpoints" / (cell_key(strategy, seed) + ".ckpt"));
      }
      TextResultRow row;
      row.strategy = strategy;
      row.seed = seed;
      row.masked_perplexity = eval_masked_perplexity(lm.checkpoint, test_rows);
      row.eval_labels = count_labels(test_rows);
      result.text_rows.push_back(row);
      write_text_file(cfg.out_dir / "text_results.csv", text_results_csv(result.text_rows));
    }
  }
  return result;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (task.has_value() == is_text()) {
    throw ValidationError("experiment config needs exactly one of task, corpus, corpus_path");
  }
  if (corpus && !corpus_path.empty()) {
    throw ValidationError("experiment config: corpus and corpus_path are exclusive");
  }
  if (strategies.empty()) {
    throw ValidationError("experiment config: strategies must be nonempty");
  }
  if (seeds.empty()) {
    throw ValidationError("experiment config: seeds must be nonempty");
  }
  if (out_dir.empty()) {
    throw ValidationError("experiment config: out_dir is required");
  }
  const auto& allowed = is_text() ? kTextStrategies : kTaskStrategies;
  for (const auto& s : strategies) {
    if (!allowed.contains(s)) {
      throw ValidationError("unknown strategy '" + s + "' for a " + (is_text() ? "text" : "task") + " experiment");
    }
  }
  if (std::set<std::string>(strategies.begin(), strategies.end()).size() != strategies.size()) {
    throw ValidationError("experiment config: duplicate strategy");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ValidationError("experiment config: duplicate seed");
  }
  if (plateau_window < 2 || !(plateau_slope >= 0.0) || !(plateau_fraction >= 0.0 && plateau_fraction <= 1.0)) {
    throw ValidationError("experiment config: invalid plateau settings");
  }
  if (fixed_iters && *fixed_iters < 0) {
    throw ValidationError("experiment config: fixed_iters must be >= 0");
  }
  {
    // vocab_size 0 means "take it from the data", which is known only at run time.
    ModelConfig m = model;
    if (m.vocab_size == 0) {
      m.vocab_size = 1;
    }
    m.validate();
  }
  train.validate();
  if (task) {
    if (task->count < 2 || test_count < 1 || test_count >= task->count) {
      throw ValidationError("experiment config: need 1 <= test_count < task.count");
    }
    TaskSpec probe = *task;
    probe.count = 1;
    const SeqDataset one = generate(probe);
    if (std::find(strategies.begin(), strategies.end(), "all_perms") != strategies.end() &&
        factorial_capped(one.target_len()) > kMaxPermutations) {
      throw ValidationError("all_perms needs L2! <= 720");
    }
    if (one.source_len() + one.target_len() > static_cast<std::size_t>(model.ctx_len)) {
      throw ValidationError("rows overflow the model ctx_len");
    }
  } else {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw ValidationError("experiment config: test_fraction must lie in (0, 1)");
    }
    if (corpus) {
      corpus->validate();
    }
  }
}

ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  try {
    if (j.contains("task")) {
      cfg.task = task_spec_from_json(j.at("task"));
    }
    cfg.test_count = j.value("test_count", cfg.test_count);
    if (j.contains("corpus")) {
      cfg.corpus = collocate_spec_from_json(j.at("corpus"));
    }
    if (j.contains("corpus_path")) {
      cfg.corpus_path = resolve(j.at("corpus_path").get<std::string>(), base_dir);
    }
    if (j.contains("bigram")) {
      cfg.bigram = bigram_options_from_json(j.at("bigram"));
    }
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
    if (j.contains("model")) {
      cfg.model = model_config_from_json(j.at("model"));
    }
    if (j.contains("train")) {
      cfg.train = train_config_from_json(j.at("train"));
    }
    if (j.contains("fixed_iters") && !j.at("fixed_iters").is_null()) {
      cfg.fixed_iters = j.at("fixed_iters").get<std::int64_t>();
    }
    if (j.contains("plateau")) {
      const auto& p = j.at("plateau");
      cfg.plateau_window = p.value("window", cfg.plateau_window);
      cfg.plateau_slope = p.value("slope", cfg.plateau_slope);
      cfg.plateau_fraction = p.value("fraction", cfg.plateau_fraction);
    }
    cfg.out_dir = resolve(j.at("out_dir").get<std::string>(), base_dir);
    if (j.contains("seeds")) {
      cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    cfg.save_checkpoints = j.value("save_checkpoints", cfg.save_checkpoints);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.task) {
    j["task"] = to_json(*cfg.task);
    j["test_count"] = cfg.test_count;
  } else {
    if (cfg.corpus) {
      j["corpus"] = to_json(*cfg.corpus);
    } else {
      j["corpus_path"] = cfg.corpus_path.string();
    }
    j["bigram"] = bigram_options_to_json(cfg.bigram);
    j["test_fraction"] = cfg.test_fraction;
  }
  j["strategies"] = cfg.strategies;
  j["model"] = to_json(cfg.model);
  j["train"] = to_json(cfg.train);
  j["fixed_iters"] = cfg.fixed_iters ? json(*cfg.fixed_iters) : json(nullptr);
  j["plateau"] = {{"window", cfg.plateau_window}, {"slope", cfg.plateau_slope}, {"fraction", cfg.plateau_fraction}};
  j["out_dir"] = cfg.out_dir.string();
  j["seeds"] = cfg.seeds;
  j["save_checkpoints"] = cfg.save_checkpoints;
  return j;
}

double accuracy_at(const TrainCurve& curve, std::int64_t iter) {
  if (curve.iters.empty()) {
    throw ValidationError("accuracy_at: empty curve");
  }
  double value = curve.test_accuracy.front();
  for (std::size_t i = 0; i < curve.iters.size() && curve.iters[i] <= iter; ++i) {
    value = curve.test_accuracy[i];
  }
  return value;
}

TrainCurve mean_curve(std::span<const TrainCurve> curves) {
  TrainCurve out;
  if (curves.empty()) {
    return out;
  }
  std::set<std::int64_t> iters;
  for (const auto& c : curves) {
    iters.insert(c.iters.begin(), c.iters.end());
  }
  for (std::int64_t it : iters) {
    double acc = 0.0;
    double loss = 0.0;
    for (const auto& c : curves) {
      acc += accuracy_at(c, it);
      // Loss carries forward the same way.
      double l = c.train_loss.front();
      for (std::size_t i = 0; i < c.iters.size() && c.iters[i] <= it; ++i) {
        l = c.train_loss[i];
      }
      loss += l;
    }
    const auto n = static_cast<double>(curves.size());
    out.iters.push_back(it);
    out.test_accuracy.push_back(acc / n);
    out.train_loss.push_back(loss / n);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir / "config.json", to_json(cfg).dump(2) + "\n");
  return cfg.is_text() ? run_text_experiment(cfg, log) : run_task_experiment(cfg, log);
}

std::vector<RankedStrategy> rank_strategies(std::span<const ResultRow> rows) {
  std::map<std::string, RankedStrategy> groups;
  for (const auto& r : rows) {
    auto [it, fresh] = groups.try_emplace(r.strategy);
    auto& g = it->second;
    if (fresh) {
      g.strategy = r.strategy;
      g.min_accuracy = r.fixed_iter_accuracy;
      g.max_accuracy = r.fixed_iter_accuracy;
    }
    g.mean_accuracy += r.fixed_iter_accuracy;
    g.mean_plateau_iter += static_cast<double>(r.plateau_iter);
    g.min_accuracy = std::min(g.min_accuracy, r.fixed_iter_accuracy);
    g.max_accuracy = std::max(g.max_accuracy, r.fixed_iter_accuracy);
    ++g.n_rows;
  }
  std::vector<RankedStrategy> out;
  for (auto& [name, g] : groups) {
    g.mean_accuracy /= static_cast<double>(g.n_rows);
    g.mean_plateau_iter /= static_cast<double>(g.n_rows);
    out.push_back(g);
  }
  std::sort(out.begin(), out.end(), [](const RankedStrategy& a, const RankedStrategy& b) {
    if (a.mean_accuracy != b.mean_accuracy) {
      return a.mean_accuracy > b.mean_accuracy;
    }
    if (a.mean_plateau_iter != b.mean_plateau_iter) {
      return a.mean_plateau_iter < b.mean_plateau_iter;
    }
    return a.strategy < b.strategy;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].rank = i + 1;
  }
  return out;
}

std::string results_csv_header() { return "strategy,perm,seed,fixed_iter_accuracy,max_accuracy,plateau_iter\n"; }

std::string format_result_row(const ResultRow& row) {
  return row.strategy + "," + join_perm(row.perm) + "," + std::to_string(row.seed) + "," +
         fmt_double(row.fixed_iter_accuracy) + "," + fmt_double(row.max_accuracy) + "," +
         std::to_string(row.plateau_iter) + "\n";
}

std::string results_csv(std::span<const ResultRow> rows) {
  std::string out = results_csv_header();
  for (const auto& r : rows) {
    out += format_result_row(r);
  }
  return out;
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line + "\n" != results_csv_header()) {
    throw ValidationError("results.csv: unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      f.push_back(cell);
    }
    if (f.size() != 6) {
      throw ValidationError("results.csv: expected 6 fields in '" + line + "'");
    }
    ResultRow r;
    r.strategy = f[0];
    std::istringstream ps(f[1]);
    for (std::size_t v; ps >> v;) {
      r.perm.push_back(v);
    }
    try {
      r.seed = std::stoull(f[2]);
      r.fixed_iter_accuracy = std::stod(f[3]);
      r.max_accuracy = std::stod(f[4]);
      r.plateau_iter = std::stoll(f[5]);
    } catch (const std::exception&) {
      throw ValidationError("results.csv: malformed number in '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string curves_csv(std::span<const CellCurve> curves) {
  std::string out = "strategy,seed,iter,test_accuracy,train_loss\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.curve.iters.size(); ++i) {
      out += c.strategy + "," + std::to_string(c.seed) + "," + std::to_string(c.curve.iters[i]) + "," +
             fmt_double(c.curve.test_accuracy[i]) + "," + fmt_double(c.curve.train_loss[i]) + "\n";
    }
  }
  return out;
}

std::string text_results_csv(std::span<const TextResultRow> rows) {
  std::string out = "strategy,seed,masked_perplexity,eval_labels\n";
  for (const auto& r : rows) {
    out += r.strategy + "," + std::to_string(r.seed) + "," + fmt_double(r.masked_perplexity) + "," +
           std::to_string(r.eval_labels) + "\n";
  }
  return out;
}

std::string curves_svg(std::span<const CellCurve> curves, std::int64_t fixed_iter, const std::string& title) {
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double kW = 720, kH = 440, kLeft = 60, kRight = 180, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  std::int64_t max_iter = std::max<std::int64_t>(fixed_iter, 1);
  for (const auto& c : curves) {
    if (!c.curve.iters.empty()) {
      max_iter = std::max(max_iter, c.curve.iters.back());
    }
  }
  auto x_of = [&](double it) { return kLeft + pw * it / static_cast<double>(max_iter); };
  auto y_of = [&](double acc) { return kTop + ph * (1.0 - acc); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << title << ": test exact match</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double acc = k / 4.0;
    svg << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << fmt_double(y_of(acc), 1) << "\" y2=\""
        << fmt_double(y_of(acc), 1) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt_double(y_of(acc) + 4, 1) << "\" text-anchor=\"end\">"
        << fmt_double(acc, 2) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double it = static_cast<double>(max_iter) * k / 4.0;
    svg << "<text x=\"" << fmt_double(x_of(it), 1) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
        << static_cast<std::int64_t>(it) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">iteration</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  if (fixed_iter > 0) {
    svg << "<line x1=\"" << fmt_double(x_of(static_cast<double>(fixed_iter)), 1) << "\" x2=\""
        << fmt_double(x_of(static_cast<double>(fixed_iter)), 1) << "\" y1=\"" << kTop << "\" y2=\"" << kTop + ph
        << "\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
  }
  const auto names = strategy_order(curves);
  for (std::size_t s = 0; s < names.size(); ++s) {
    const TrainCurve mean = strategy_mean(curves, names[s]);
    const char* color = kColors[s % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < mean.iters.size(); ++i) {
      svg << (i ? " " : "") << fmt_double(x_of(static_cast<double>(mean.iters[i])), 1) << ","
          << fmt_double(y_of(mean.test_accuracy[i]), 1);
    }
    svg << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s) + 8;
    svg << "<line x1=\"" << kW - kRight + 12 << "\" x2=\"" << kW - kRight + 32 << "\" y1=\"" << ly << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kW - kRight + 38 << "\" y=\"" << ly + 4 << "\">" << names[s] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ordlab
