#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.h"
#include "lexspec/encoder.h"

namespace lexspec::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kMining = fs::path(LEXSPEC_TEST_DATA) / "mining";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result lexspec(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("lexspec_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<std::string> mine_args(const fs::path& out) const {
    return {"mine",           "--dump",       (kMining / "dump.jsonl").string(),
            "--freq_dir",     (kMining / "freq").string(),
            "--langs",        "bg,de,en,fr,ht,it,nl,ro,tl",
            "--seed_count",   "8",
            "--frequency_cutoff", "10",
            "--stopwords",    (kMining / "stopwords.txt").string(),
            "--exclusions",   (kMining / "exclusions.tsv").string(),
            "--out",          out.string()};
  }

  fs::path synth() const {
    const fs::path data = dir_ / "data";
    const auto r = lexspec({"synth", "--out", data.string(), "--seed", "2"});
    EXPECT_EQ(r.code, 0) << r.err;
    return data;
  }

  std::vector<std::string> train_args(const fs::path& data, const fs::path& out) const {
    return {"train",
            "--constraints", (data / "constraints.tsv").string(),
            "--vocab", (data / "vocab.txt").string(),
            "--vectors", (data / "vectors.txt").string(),
            "--validation", (data / "valid_0.tsv").string() + "," + (data / "valid_1.tsv").string(),
            "--validation_vocab", (data / "valid_0_vocab.txt").string() + "," + (data / "valid_1_vocab.txt").string(),
            "--lr", "1e-3",
            "--epochs", "4",
            "--seed", "1",
            "--out", out.string()};
  }

  fs::path dir_;
};

TEST_F(Cli, MineWritesDeterministicConstraintsAndStats) {
  const auto r1 = lexspec(mine_args(dir_ / "a"));
  ASSERT_EQ(r1.code, 0) << r1.err;
  const auto r2 = lexspec(mine_args(dir_ / "b"));
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_EQ(slurp(dir_ / "a" / "constraints.tsv"), slurp(dir_ / "b" / "constraints.tsv"));
  EXPECT_EQ(slurp(dir_ / "a" / "stats.json"), slurp(dir_ / "b" / "stats.json"));

  const json stats = json::parse(slurp(dir_ / "a" / "stats.json"));
  std::size_t sum = 0;
  for (const auto& [key, n] : stats["pairs"].items()) sum += n.get<std::size_t>();
  const std::size_t rows = line_count(dir_ / "a" / "constraints.tsv") - 1;
  EXPECT_EQ(sum, rows);
  EXPECT_EQ(stats["total"].get<std::size_t>(), rows);
  EXPECT_EQ(rows, 20u);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "run_config.txt"));
}

TEST_F(Cli, MineWithoutFrequencyListExitsTwoNamingTheLanguage) {
  auto args = mine_args(dir_ / "a");
  args[6] = "en,fr,xx";
  const auto r = lexspec(args);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("xx"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingInputIsAnIoFailure) {
  auto args = mine_args(dir_ / "a");
  args[2] = (dir_ / "nope.jsonl").string();
  EXPECT_EQ(lexspec(args).code, 1);
}

TEST_F(Cli, TrainThenEvaluateTheSyntheticLexicon) {
  const fs::path data = synth();
  const auto t = lexspec(train_args(data, dir_ / "run"));
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "best" / "weights.bin"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "initial" / "manifest.json"));
  const json summary = json::parse(slurp(dir_ / "run" / "summary.json"));
  EXPECT_GT(summary["best_metric"].get<double>(), 0.0);
  EXPECT_NE(t.out.find("best validation metric"), std::string::npos);

  const auto e = lexspec({"eval-bli", "--checkpoint", (dir_ / "run" / "best").string(), "--dataset",
                          (data / "test.tsv").string(), "--target_vocab", (data / "test_vocab.txt").string(),
                          "--out", (dir_ / "eval").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const json report = json::parse(slurp(dir_ / "eval" / "report.json"));
  ASSERT_EQ(report["per_layer"].size(), 3u);
  double best = -1.0;
  for (const auto& v : report["per_layer"]) best = std::max(best, v.get<double>());
  EXPECT_EQ(report["best_score"].get<double>(), best);
  EXPECT_EQ(report["task"], "bli");
  EXPECT_NE(e.out.find("best layer"), std::string::npos);
}

TEST_F(Cli, SameSeedGivesIdenticalLogs) {
  const fs::path data = synth();
  auto args = train_args(data, dir_ / "a");
  args[args.size() - 5] = "1";  // one epoch
  ASSERT_EQ(lexspec(args).code, 0);
  args.back() = (dir_ / "b").string();
  ASSERT_EQ(lexspec(args).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "train_log.jsonl"), slurp(dir_ / "b" / "train_log.jsonl"));
  EXPECT_EQ(slurp(dir_ / "a" / "best" / "weights.bin"), slurp(dir_ / "b" / "best" / "weights.bin"));
}

TEST_F(Cli, ZeroEpochsIsInvalid) {
  const fs::path data = synth();
  auto args = train_args(data, dir_ / "run");
  args[args.size() - 5] = "0";
  EXPECT_EQ(lexspec(args).code, 2);
}

TEST_F(Cli, PerfectAlignmentScoresOne) {
  EncoderConfig c;
  c.dim = 2;
  c.num_layers = 0;
  EncoderModel m(c, SubwordVocabulary({"cat", "dog", "chat", "chien"}));
  const std::vector<double> rows = {1, 0, 0, 1, 1, 0.01, 0.01, 1};
  for (std::size_t i = 0; i < rows.size(); ++i) m.embeddings().mutable_values()[3 * 2 + i] = rows[i];
  save_checkpoint(m, dir_ / "ckpt");
  std::ofstream(dir_ / "test.tsv") << "cat\tchat\ndog\tchien\n";
  std::ofstream(dir_ / "vocab.txt") << "chat\nchien\n";
  const auto r = lexspec({"eval-bli", "--checkpoint", (dir_ / "ckpt").string(), "--dataset",
                          (dir_ / "test.tsv").string(), "--target_vocab", (dir_ / "vocab.txt").string(), "--layer",
                          "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(r.out.substr(0, r.out.rfind("best layer")));
  EXPECT_EQ(report["per_layer"][0].get<double>(), 1.0);

  std::ofstream(dir_ / "vocab.txt") << "chat\n";
  EXPECT_EQ(lexspec({"eval-bli", "--checkpoint", (dir_ / "ckpt").string(), "--dataset",
                     (dir_ / "test.tsv").string(), "--target_vocab", (dir_ / "vocab.txt").string()})
                .code,
            2);
}

TEST_F(Cli, AnalyzeCommands) {
  std::ofstream(dir_ / "f.csv") << "lang,f1,f2\naa,1,0\nbb,1,0\ncc,0,1\n";
  auto r = lexspec({"analyze", "diversity", "--features", (dir_ / "f.csv").string(), "--sample", "aa,bb"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["d_typ"].get<double>(), 0.0);

  r = lexspec({"analyze", "similarity", "--features", (dir_ / "f.csv").string(), "--train_langs", "cc",
               "--test_langs", "cc"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["sim_train_test"].get<double>(), 1.0);

  ASSERT_EQ(lexspec({"synth", "--out", (dir_ / "s").string(), "--words_per_concept", "4", "--train_constraints",
                     "1200"})
                .code,
            0);
  for (const std::string target : {"10", "100", "1000"}) {
    r = lexspec({"analyze", "subset", "--constraints", (dir_ / "s" / "constraints.tsv").string(), "--target", target,
                 "--out", (dir_ / ("sub" + target)).string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(dir_ / ("sub" + target) / "constraints.tsv") - 1, std::stoul(target));
  }
  r = lexspec({"analyze", "plan", "--langs", "aa,bb", "--budget", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["total"], 9);
  r = lexspec({"analyze", "distribution", "--constraints", (dir_ / "s" / "constraints.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, ConfigPrecedenceAndUnknownKeys) {
  std::ofstream(dir_ / "run.cfg") << "# plan settings\nlangs = aa,bb\nbudget = 1\n";
  auto budget_of = [&](const std::vector<std::string>& extra) {
    std::vector<std::string> args = {"analyze", "plan", "--config", (dir_ / "run.cfg").string(), "--out",
                                     (dir_ / "out").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = lexspec(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return json::parse(slurp(dir_ / "out" / "report.json"))["total"].get<int>();
  };
  EXPECT_EQ(budget_of({}), 3);
  ::setenv("LEXSPEC_BUDGET", "2", 1);
  EXPECT_EQ(budget_of({}), 6);
  EXPECT_EQ(budget_of({"--budget", "5"}), 15);
  ::unsetenv("LEXSPEC_BUDGET");
  EXPECT_NE(slurp(dir_ / "out" / "run_config.txt").find("budget=5\n"), std::string::npos);

  std::ofstream(dir_ / "bad.cfg") << "colour = blue\n";
  const auto r = lexspec({"analyze", "plan", "--config", (dir_ / "bad.cfg").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrorsAndHelp) {
  EXPECT_EQ(lexspec({}).code, 2);
  EXPECT_EQ(lexspec({"frobnicate"}).code, 2);
  EXPECT_EQ(lexspec({"mine", "--no-such-flag", "1"}).code, 2);
  const auto h = lexspec({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("eval-bli"), std::string::npos);
  EXPECT_EQ(lexspec({"train", "--help"}).code, 0);
}

}  // namespace
}  // namespace lexspec::cli
