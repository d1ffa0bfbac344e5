// ordlab command-line front end.
//
// Exit codes: 0 success, 1 invalid input or I/O failure, 2 failing oracle check.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ordlab/bigram.hpp"
#include "ordlab/dataio.hpp"
#include "ordlab/error.hpp"
#include "ordlab/experiment.hpp"
#include "ordlab/mi.hpp"
#include "ordlab/permute.hpp"
#include "ordlab/taskgen.hpp"
#include "ordlab/tinylm.hpp"
#include "ordlab/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ordlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitOracle = 2;

OrderingPlan load_plan(const fs::path& path) {
  try {
    return plan_from_json(json::parse(read_text_file(path)));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

/// A checkpoint path may name the file or the directory `train` wrote.
fs::path checkpoint_file(const fs::path& p) { return fs::is_directory(p) ? p / "model.ckpt" : p; }

bool is_augmented_jsonl(const std::string& text) {
  const auto nl = text.find('\n');
  try {
    const json header = json::parse(text.substr(0, nl));
    return header.value("format", std::string{}) == "ordlab-aug";
  } catch (const json::exception&) {
    return false;
  }
}

struct GenArgs {
  std::string task;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  bool with_operators = false;
  bool constant_label = false;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  TaskSpec spec{parse_task_kind(a.task), a.count, a.seed, a.with_operators, a.constant_label};
  if (spec.count < 1) {
    throw ValidationError("--count must be >= 1");
  }
  const SeqDataset ds = generate(spec);
  save_jsonl(ds, a.out);
  print({{"task", ds.task_name},
         {"rows", ds.size()},
         {"source_len", ds.source_len()},
         {"target_len", ds.target_len()},
         {"out", a.out}});
  return kExitOk;
}

struct OrderArgs {
  std::string data;
  std::string strategy = "maxmi";
  std::string estimator = "factored";
  std::string out;
};

int cmd_order(const OrderArgs& a) {
  const SeqDataset ds = load_jsonl(a.data);
  OrderingPlan plan;
  if (a.strategy == "maxmi") {
    const Estimator est = parse_estimator(a.estimator);
    if (est == Estimator::None) {
      throw ValidationError("--estimator must be joint or factored");
    }
    plan = greedy_order(ds, est);
  } else if (a.strategy == "plain") {
    plan = identity_plan(ds.target_len());
  } else if (a.strategy == "reverse") {
    plan = reverse_plan(ds.target_len());
  } else {
    throw ValidationError("unknown strategy '" + a.strategy + "'");
  }
  plan.task_name = ds.task_name;
  write_text_file(a.out, to_json(plan).dump(2) + "\n");
  print({{"order", describe(plan, ds.target_labels)}, {"perm", plan.perm}, {"estimator", to_string(plan.estimator)},
         {"out", a.out}});
  return kExitOk;
}

struct PermuteArgs {
  std::string in;
  std::string plan;
  std::string out;
  bool inverse = false;
};

int cmd_permute(const PermuteArgs& a) {
  const SeqDataset ds = load_jsonl(a.in);
  OrderingPlan plan = load_plan(a.plan);
  if (a.inverse) {
    plan = inverse_plan(plan);
  }
  const SeqDataset out = apply_to_dataset(ds, plan);
  save_jsonl(out, a.out);
  print({{"rows", out.size()}, {"perm", plan.perm}, {"task_name", out.task_name}, {"out", a.out}});
  return kExitOk;
}

struct TrainArgs {
  std::string data;
  std::string plan;
  std::string eval_data;
  std::int64_t iters = 5000;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::size_t> test_count;
  std::string model_config;
  std::optional<double> lr;
  std::optional<int> batch;
  std::optional<std::int64_t> eval_every;
  std::optional<int> patience;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  const SeqDataset data = load_jsonl(a.data);
  const OrderingPlan plan = a.plan.empty() ? identity_plan(data.target_len()) : load_plan(a.plan);

  SeqDataset train_set;
  SeqDataset eval_set;
  if (!a.eval_data.empty()) {
    train_set = data;
    eval_set = load_jsonl(a.eval_data);
  } else {
    const std::size_t n = data.size();
    const std::size_t hold = a.test_count ? *a.test_count : (n > 2000 ? 1000 : std::max<std::size_t>(1, n / 10));
    if (hold >= n) {
      throw ValidationError("--test-count must be smaller than the dataset");
    }
    train_set = slice(data, 0, n - hold);
    eval_set = slice(data, n - hold, n);
  }

  ModelConfig mc;
  if (!a.model_config.empty()) {
    try {
      mc = model_config_from_json(json::parse(read_text_file(a.model_config)));
    } catch (const json::parse_error& e) {
      throw ValidationError(a.model_config + ": " + e.what());
    }
  }
  TrainConfig tc;
  tc.max_iters = a.iters;
  tc.seed = a.seed;
  if (a.lr) tc.lr = *a.lr;
  if (a.batch) tc.batch = *a.batch;
  if (a.eval_every) tc.eval_every = *a.eval_every;
  if (a.patience) tc.patience = *a.patience;

  ProgressFn progress;
  if (!a.quiet) {
    progress = [](std::int64_t it, double loss, double acc) {
      std::cerr << "iter " << it << " loss " << loss << " acc " << acc << '\n';
    };
  }
  const TrainResult r = train(mc, tc, train_set, eval_set, plan, progress);
  const fs::path out(a.out);
  save_checkpoint(r.checkpoint, out / "model.ckpt");
  std::string csv = "iter,test_accuracy,train_loss\n";
  for (std::size_t i = 0; i < r.curve.iters.size(); ++i) {
    csv += std::to_string(r.curve.iters[i]) + "," + std::to_string(r.curve.test_accuracy[i]) + "," +
           std::to_string(r.curve.train_loss[i]) + "\n";
  }
  write_text_file(out / "curve.csv", csv);
  const json summary = {{"checkpoint", (out / "model.ckpt").string()},
                        {"best_iteration", r.checkpoint.iteration},
                        {"best_accuracy", *std::max_element(r.curve.test_accuracy.begin(), r.curve.test_accuracy.end())},
                        {"final_iteration", r.curve.iters.back()},
                        {"train_rows", train_set.size()},
                        {"eval_rows", eval_set.size()},
                        {"plan", to_json(plan)}};
  write_text_file(out / "train_summary.json", summary.dump(2) + "\n");
  print(summary);
  return kExitOk;
}

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string plan;
};

int cmd_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_file(a.ckpt));
  const std::string text = read_text_file(a.data);
  if (is_augmented_jsonl(text)) {
    const AugmentResult aug = augmented_from_jsonl(text);
    if (!(aug.vocab == ckpt.vocab)) {
      throw ValidationError("checkpoint vocab does not match the augmented corpus");
    }
    std::vector<LmSequence> seqs;
    for (const auto& s : aug.sentences) {
      seqs.push_back(to_lm_sequence(s));
    }
    print({{"perplexity", eval_masked_perplexity(ckpt, seqs)}, {"labels", count_labels(seqs)}});
    return kExitOk;
  }
  const SeqDataset ds = from_jsonl(text);
  const OrderingPlan plan = a.plan.empty() ? ckpt.plan : load_plan(a.plan);
  if (plan.perm != ckpt.plan.perm) {
    std::cerr << "warning: evaluating with a plan other than the one the checkpoint was trained under\n";
  }
  print({{"accuracy", eval_exact_match(ckpt, ds, plan)}, {"rows", ds.size()}, {"perm", plan.perm}});
  return kExitOk;
}

struct AugmentArgs {
  std::string in;
  std::string out;
  BigramTrainOptions opts;
  std::string selector = "maxmi";
};

int cmd_augment(const AugmentArgs& a) {
  const auto docs = split_documents(read_text_file(a.in));
  const Preprocessed pre = preprocess(docs);
  BigramTrainReport report;
  const BigramModel model = train_bigram(pre, a.opts, &report);
  const AugmentResult aug = augment_corpus(model, pre, parse_selector(a.selector));
  write_text_file(a.out, augmented_to_jsonl(aug));
  print({{"documents", pre.n_documents},
         {"sentences", aug.sentences.size()},
         {"lemma_vocab", pre.vocab.size()},
         {"surface_vocab", aug.vocab.size()},
         {"final_loss", report.loss_per_epoch.back()},
         {"out", a.out}});
  return kExitOk;
}

int cmd_run(const std::string& config_path, bool quiet) {
  json j;
  try {
    j = json::parse(read_text_file(config_path));
  } catch (const json::parse_error& e) {
    throw ValidationError(config_path + ": " + e.what());
  }
  const ExperimentConfig cfg = experiment_config_from_json(j, fs::path(config_path).parent_path());
  const ExperimentResult r = run_experiment(cfg, quiet ? nullptr : &std::cerr);
  json out = {{"out_dir", cfg.out_dir.string()}};
  if (cfg.is_text()) {
    json rows = json::array();
    for (const auto& t : r.text_rows) {
      rows.push_back({{"strategy", t.strategy}, {"seed", t.seed}, {"masked_perplexity", t.masked_perplexity}});
    }
    out["text_results"] = rows;
  } else {
    out["fixed_iter"] = r.fixed_iter;
    out["best_strategy"] = r.best_strategy;
    json ranking = json::array();
    for (const auto& s : rank_strategies(r.rows)) {
      ranking.push_back({{"rank", s.rank}, {"strategy", s.strategy}, {"mean_accuracy", s.mean_accuracy}});
    }
    out["ranking"] = ranking;
  }
  print(out);
  return kExitOk;
}

int cmd_verify(const std::string& suite, bool corrupt_perm, const std::string& out) {
  const VerifyReport rep = verify(parse_suite(suite), VerifyOptions{corrupt_perm});
  const json j = to_json(rep);
  if (!out.empty()) {
    write_text_file(out, j.dump(2) + "\n");
  }
  print(j);
  return rep.passed() ? kExitOk : kExitOracle;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ordlab: target-token ordering laboratory"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a task dataset as JSONL");
  g->add_option("--task", gen.task, "add3|mul2|mul3|log4|gcd3|cr2|mlc")->required();
  g->add_option("--count", gen.count, "Number of rows")->required();
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_flag("--with-operators", gen.with_operators, "Keep operator tokens");
  g->add_flag("--constant-label", gen.constant_label, "mlc only: constant last label");
  g->add_option("--out", gen.out, "Output JSONL")->required();

  OrderArgs order;
  auto* o = app.add_subcommand("order", "Compute an ordering plan");
  o->add_option("--data", order.data, "Dataset JSONL")->required();
  o->add_option("--strategy", order.strategy, "maxmi|plain|reverse");
  o->add_option("--estimator", order.estimator, "joint|factored (maxmi only)");
  o->add_option("--out", order.out, "Plan JSON")->required();

  PermuteArgs perm;
  auto* p = app.add_subcommand("permute", "Apply a plan to a dataset's targets");
  p->add_option("--in", perm.in, "Dataset JSONL")->required();
  p->add_option("--plan", perm.plan, "Plan JSON")->required();
  p->add_option("--out", perm.out, "Output JSONL")->required();
  p->add_flag("--inverse", perm.inverse, "Apply the inverse plan");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the transformer on a dataset under a plan");
  t->add_option("--data", tr.data, "Dataset JSONL in original target order")->required();
  t->add_option("--plan", tr.plan, "Plan JSON (default: identity)");
  t->add_option("--eval-data", tr.eval_data, "Held-out JSONL (default: tail of --data)");
  t->add_option("--test-count", tr.test_count, "Rows held out from the tail of --data");
  t->add_option("--iters", tr.iters, "Maximum iterations");
  t->add_option("--seed", tr.seed, "Training seed");
  t->add_option("--model-config", tr.model_config, "ModelConfig JSON");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--batch", tr.batch, "Batch size");
  t->add_option("--eval-every", tr.eval_every, "Evaluation interval");
  t->add_option("--patience", tr.patience, "Evaluations without improvement before stopping");
  t->add_flag("--quiet", tr.quiet, "No progress output");
  t->add_option("--out", tr.out, "Checkpoint directory")->required();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Exact match (task data) or masked perplexity (augmented corpus)");
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file or directory")->required();
  e->add_option("--data", ev.data, "Dataset JSONL or augmented JSONL")->required();
  e->add_option("--plan", ev.plan, "Plan JSON (default: the checkpoint's plan)");

  AugmentArgs aug;
  auto* a = app.add_subcommand("augment", "Insert MI-selected words into a text corpus");
  a->set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
  a->add_option("--in", aug.in, "Text corpus, documents separated by blank lines")->required();
  a->add_option("--out", aug.out, "Augmented JSONL")->required();
  a->add_option("--d", aug.opts.d, "Embedding dimension");
  a->add_option("--h", aug.opts.h, "Hidden dimension");
  a->add_option("--neg", aug.opts.negatives_per_positive, "Negatives per positive");
  a->add_option("--epochs", aug.opts.epochs, "Gradient-descent epochs");
  a->add_option("--lr", aug.opts.lr, "Learning rate");
  a->add_option("--seed", aug.opts.seed, "Seed");
  a->add_option("--selector", aug.selector, "maxmi|tfidf|pcond");

  std::string config;
  bool quiet = false;
  auto* r = app.add_subcommand("run", "Run an experiment config");
  r->add_option("--config", config, "Experiment JSON")->required();
  r->add_flag("--quiet", quiet, "No progress output");

  std::string suite = "all";
  bool corrupt_perm = false;
  std::string report_out;
  auto* v = app.add_subcommand("verify", "Run the oracle suites");
  v->add_option("--suite", suite, "mi|permute|bigram|tinylm|all");
  v->add_flag("--corrupt-perm", corrupt_perm, "Negative control for the permute suite");
  v->add_option("--out", report_out, "Also write the report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*o) return cmd_order(order);
    if (*p) return cmd_permute(perm);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*a) return cmd_augment(aug);
    if (*r) return cmd_run(config, quiet);
    if (*v) return cmd_verify(suite, corrupt_perm, report_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
