#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ordlab/dataio.hpp"
#include "ordlab/permute.hpp"

using namespace ordlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(ORDLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    return r;
  }
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) {
    r.out.append(buf, n);
  }
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ordlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandIsInvalid) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST_F(Cli, GenWritesLoadableDataset) {
  const auto r = cli("gen --task mul2 --count 50 --seed 3 --out " + path("m.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(json::parse(r.out).at("rows"), 50);
  const auto ds = load_jsonl(path("m.jsonl"));
  EXPECT_EQ(ds.size(), 50u);
  EXPECT_EQ(ds.target_len(), 4u);
}

TEST_F(Cli, ValidationFailuresExitOne) {
  EXPECT_EQ(cli("gen --task nosuchtask --count 5 --out " + path("x.jsonl")).code, 1);
  EXPECT_EQ(cli("gen --task add3 --count 0 --out " + path("x.jsonl")).code, 1);
  EXPECT_EQ(cli("gen --task add3 --out " + path("x.jsonl")).code, 1);
  EXPECT_EQ(cli("permute --in " + path("missing.jsonl") + " --plan p.json --out o.jsonl").code, 1);
  EXPECT_EQ(cli("verify --suite nosuchsuite").code, 1);
  EXPECT_FALSE(fs::exists(path("x.jsonl")));
}

TEST_F(Cli, OrderThenPermuteRoundTrips) {
  ASSERT_EQ(cli("gen --task mlc --count 2000 --seed 1 --out " + path("d.jsonl")).code, 0);
  const auto r = cli("order --data " + path("d.jsonl") + " --strategy maxmi --out " + path("plan.json"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(json::parse(r.out).at("perm").at(0), 1);  // the planted label C2 goes first
  ASSERT_EQ(cli("permute --in " + path("d.jsonl") + " --plan " + path("plan.json") + " --out " + path("p.jsonl")).code,
            0);
  ASSERT_EQ(cli("permute --in " + path("p.jsonl") + " --plan " + path("plan.json") + " --inverse --out " +
                   path("back.jsonl"))
                .code,
            0);
  const auto original = load_jsonl(path("d.jsonl"));
  const auto permuted = load_jsonl(path("p.jsonl"));
  const auto back = load_jsonl(path("back.jsonl"));
  EXPECT_EQ(back.examples, original.examples);
  const auto plan = plan_from_json(json::parse(read_text_file(path("plan.json"))));
  for (std::size_t i = 0; i < original.size(); ++i) {
    ASSERT_EQ(permuted.examples[i].target, apply_plan(original.examples[i].target, plan));
  }
  EXPECT_EQ(cli("order --data " + path("d.jsonl") + " --strategy sideways --out " + path("q.json")).code, 1);
}

TEST_F(Cli, TrainThenEval) {
  ASSERT_EQ(cli("gen --task add3 --count 120 --seed 2 --out " + path("d.jsonl")).code, 0);
  write_text_file(path("model.json"), R"({"n_layers": 1, "n_heads": 2, "d_model": 16, "ctx_len": 12})");
  const auto t = cli("train --data " + path("d.jsonl") + " --model-config " + path("model.json") +
                        " --iters 20 --eval-every 10 --lr 1e-3 --batch 8 --quiet --out " + path("ckpt"));
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_EQ(json::parse(t.out).at("eval_rows"), 12);
  EXPECT_TRUE(fs::exists(path("ckpt/model.ckpt")));
  EXPECT_TRUE(fs::exists(path("ckpt/curve.csv")));
  const auto e = cli("eval --ckpt " + path("ckpt") + " --data " + path("d.jsonl"));
  ASSERT_EQ(e.code, 0) << e.out;
  const double acc = json::parse(e.out).at("accuracy");
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_EQ(cli("train --data " + path("d.jsonl") + " --test-count 120 --out " + path("c2")).code, 1);
  EXPECT_EQ(cli("eval --ckpt " + path("nothing") + " --data " + path("d.jsonl")).code, 1);
}

TEST_F(Cli, AugmentWritesJsonl) {
  write_text_file(path("corpus.txt"), "The cats sat on mats. Dogs ran home.\n\nBirds sang loudly. The sun rose.\n");
  const auto r = cli("augment --in " + path("corpus.txt") + " --epochs 20 --out " + path("aug.jsonl"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(json::parse(r.out).at("sentences"), 4);
  EXPECT_EQ(cli("augment --in " + path("corpus.txt") + " --selector nope --out " + path("b.jsonl")).code, 1);
}

TEST_F(Cli, VerifyPassesAndCorruptPermFails) {
  const auto ok = cli("verify --suite permute");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_TRUE(json::parse(ok.out).at("passed").get<bool>());
  const auto bad = cli("verify --suite permute --corrupt-perm --out " + path("report.json"));
  EXPECT_EQ(bad.code, 2);
  EXPECT_FALSE(json::parse(read_text_file(path("report.json"))).at("passed").get<bool>());
  EXPECT_EQ(cli("verify --suite mi").code, 0);
}

TEST_F(Cli, RunRejectsBadConfig) {
  write_text_file(path("bad.json"), R"({"task": {"kind": "Addition3", "count": 10}, "strategies": ["zigzag"], "out_dir": "o"})");
  EXPECT_EQ(cli("run --config " + path("bad.json")).code, 1);
  write_text_file(path("junk.json"), "{not json");
  EXPECT_EQ(cli("run --config " + path("junk.json")).code, 1);
}
