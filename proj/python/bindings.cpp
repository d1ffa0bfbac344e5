// Python bindings for the ordlab core. Structured values (plans, configs,
// reports) cross the boundary as plain dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

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

namespace py = pybind11;
using nlohmann::json;
using namespace ordlab;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

OrderingPlan plan_of(const std::vector<std::size_t>& perm) {
  OrderingPlan p;
  p.perm = perm;
  return p;
}

std::vector<std::vector<TokenId>> sources(const SeqDataset& ds) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& ex : ds.examples) {
    out.push_back(ex.source);
  }
  return out;
}

std::vector<std::vector<TokenId>> targets(const SeqDataset& ds) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& ex : ds.examples) {
    out.push_back(ex.target);
  }
  return out;
}

py::dict train_result(const TrainResult& r) {
  py::dict d;
  d["iters"] = r.curve.iters;
  d["test_accuracy"] = r.curve.test_accuracy;
  d["train_loss"] = r.curve.train_loss;
  d["best_iteration"] = r.checkpoint.iteration;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ordlab, m) {
  m.doc() = "Target-token ordering laboratory (C++ core)";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<SeqDataset>(m, "Dataset")
      .def_readonly("task_name", &SeqDataset::task_name)
      .def_readonly("target_labels", &SeqDataset::target_labels)
      .def_property_readonly("vocab", [](const SeqDataset& d) { return d.vocab.symbols(); })
      .def_property_readonly("sources", &sources)
      .def_property_readonly("targets", &targets)
      .def_property_readonly("source_len", &SeqDataset::source_len)
      .def_property_readonly("target_len", &SeqDataset::target_len)
      .def("__len__", &SeqDataset::size)
      .def("slice", [](const SeqDataset& d, std::size_t b, std::size_t e) { return slice(d, b, e); })
      .def("to_jsonl", [](const SeqDataset& d) { return to_jsonl(d); })
      .def_static("from_jsonl", [](const std::string& text) { return from_jsonl(text); })
      .def("save", [](const SeqDataset& d, const std::filesystem::path& p) { save_jsonl(d, p); })
      .def_static("load", [](const std::filesystem::path& p) { return load_jsonl(p); })
      .def("__eq__", [](const SeqDataset& a, const SeqDataset& b) { return a == b; })
      .def("__repr__", [](const SeqDataset& d) {
        return "<Dataset " + d.task_name + " rows=" + std::to_string(d.size()) + ">";
      });

  m.def(
      "generate",
      [](const std::string& task, std::size_t count, std::uint64_t seed, bool with_operators, bool constant_label) {
        return generate({parse_task_kind(task), count, seed, with_operators, constant_label});
      },
      py::arg("task"), py::arg("count"), py::arg("seed") = 0, py::arg("with_operators") = false,
      py::arg("constant_label") = false, "Generate a task dataset (add3, mul2, mul3, log4, gcd3, cr2, mlc).");

  m.def(
      "mi_exact",
      [](const std::vector<std::int64_t>& x, const std::vector<std::int64_t>& y) { return mi_exact(x, y).value; },
      py::arg("x"), py::arg("y"), "Plug-in mutual information in nats.");
  m.def(
      "entropy", [](const std::vector<std::int64_t>& x) { return entropy_codes(x); }, py::arg("x"));

  m.def(
      "greedy_order",
      [](const SeqDataset& ds, const std::string& estimator) {
        return to_py(to_json(greedy_order(ds, parse_estimator(estimator))));
      },
      py::arg("dataset"), py::arg("estimator") = "factored",
      "Greedy MaxMI ordering plan as a dict with 'perm' and per-step scores.");

  m.def(
      "identity_plan", [](std::size_t n) { return identity_plan(n).perm; }, py::arg("length"));
  m.def(
      "reverse_plan", [](std::size_t n) { return reverse_plan(n).perm; }, py::arg("length"));
  m.def(
      "inverse_plan", [](const std::vector<std::size_t>& perm) { return inverse_plan(plan_of(perm)).perm; },
      py::arg("perm"));
  m.def(
      "apply_plan",
      [](const std::vector<TokenId>& target, const std::vector<std::size_t>& perm) {
        return apply_plan(target, plan_of(perm));
      },
      py::arg("target"), py::arg("perm"), "output[k] = target[perm[k]]");
  m.def(
      "restore_output",
      [](const std::vector<TokenId>& predicted, const std::vector<std::size_t>& perm) {
        return restore_output(predicted, plan_of(perm));
      },
      py::arg("predicted"), py::arg("perm"));
  m.def(
      "apply_to_dataset",
      [](const SeqDataset& ds, const std::vector<std::size_t>& perm) { return apply_to_dataset(ds, plan_of(perm)); },
      py::arg("dataset"), py::arg("perm"));

  m.def(
      "dpi_check",
      [](std::uint64_t seed, std::size_t max_support, std::size_t n_samples) {
        const DpiReport r = dpi_check(random_chain(seed, max_support), n_samples, seed);
        py::dict d;
        d["mi_it"] = r.mi_it;
        d["mi_tt"] = r.mi_tt;
        d["epsilon"] = r.epsilon;
        d["holds"] = r.holds;
        return d;
      },
      py::arg("seed"), py::arg("max_support") = 6, py::arg("n_samples") = 100000);

  m.def(
      "augment",
      [](const std::string& text, const std::string& selector, int epochs, std::uint64_t seed) {
        const Preprocessed pre = preprocess(split_documents(text));
        BigramTrainOptions opts;
        opts.epochs = epochs;
        opts.seed = seed;
        py::gil_scoped_release release;
        return augmented_to_jsonl(augment_corpus(train_bigram(pre, opts), pre, parse_selector(selector)));
      },
      py::arg("text"), py::arg("selector") = "maxmi", py::arg("epochs") = BigramTrainOptions{}.epochs,
      py::arg("seed") = 1, "Augment a corpus (documents separated by blank lines); returns augmented JSONL.");
  m.def(
      "strip_augmented",
      [](const std::string& jsonl) {
        const AugmentResult aug = augmented_from_jsonl(jsonl);
        std::vector<std::vector<std::string>> out;
        for (const auto& s : aug.sentences) {
          out.push_back(decode(strip_augmentation(s), aug.vocab));
        }
        return out;
      },
      py::arg("jsonl"), "Sentences of an augmented corpus with the inserted words removed.");

  m.def(
      "train",
      [](const SeqDataset& train_set, const SeqDataset& eval_set, std::vector<std::size_t> perm,
         const py::dict& model, const py::dict& train_cfg, const std::string& checkpoint) {
        const ModelConfig mc = model_config_from_json(from_py(model));
        const TrainConfig tc = train_config_from_json(from_py(train_cfg));
        if (perm.empty()) {
          perm = identity_plan(train_set.target_len()).perm;
        }
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(mc, tc, train_set, eval_set, plan_of(perm));
        }
        if (!checkpoint.empty()) {
          save_checkpoint(r.checkpoint, checkpoint);
        }
        return train_result(r);
      },
      py::arg("train_set"), py::arg("eval_set"), py::arg("perm") = std::vector<std::size_t>{},
      py::arg("model") = py::dict(), py::arg("train") = py::dict(), py::arg("checkpoint") = "",
      "Train the transformer under a plan; returns the accuracy curve.");
  m.def(
      "eval_exact_match",
      [](const std::filesystem::path& checkpoint, const SeqDataset& ds) {
        const Checkpoint ckpt = load_checkpoint(checkpoint);
        return eval_exact_match(ckpt, ds, ckpt.plan);
      },
      py::arg("checkpoint"), py::arg("dataset"));

  m.def(
      "run_experiment",
      [](const py::dict& config, const std::filesystem::path& base_dir) {
        const ExperimentConfig cfg = experiment_config_from_json(from_py(config), base_dir);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg);
        }
        json out = {{"out_dir", cfg.out_dir.string()}, {"fixed_iter", r.fixed_iter},
                    {"best_strategy", r.best_strategy}};
        json rows = json::array();
        for (const auto& row : r.rows) {
          rows.push_back({{"strategy", row.strategy}, {"perm", row.perm}, {"seed", row.seed},
                          {"fixed_iter_accuracy", row.fixed_iter_accuracy}, {"max_accuracy", row.max_accuracy},
                          {"plateau_iter", row.plateau_iter}});
        }
        out["rows"] = rows;
        json text_rows = json::array();
        for (const auto& t : r.text_rows) {
          text_rows.push_back({{"strategy", t.strategy}, {"seed", t.seed}, {"masked_perplexity", t.masked_perplexity},
                               {"eval_labels", t.eval_labels}});
        }
        out["text_rows"] = text_rows;
        return to_py(out);
      },
      py::arg("config"), py::arg("base_dir") = std::filesystem::path{},
      "Run an experiment config (same schema as `ordlab run`).");

  m.def(
      "verify", [](const std::string& suite) { return to_py(to_json(verify(parse_suite(suite)))); },
      py::arg("suite") = "all", "Run the built-in oracle suites.");
}
