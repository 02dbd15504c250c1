#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "feather_cli/cli.hpp"
#include "temp_dir.hpp"

namespace feather {
namespace {

using testing::read_file;
using testing::TempDir;

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "feather");
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

TEST(Cli, CountOpsPrintsOneDecimal) {
  const RunResult r = run_cli({"count-ops", "--input", "256", "--hidden", "256", "--sparsity", "0.9"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "52428.8\n");
  EXPECT_EQ(run_cli({"count-ops", "--input", "256", "--hidden", "256", "--sparsity", "0"}).out, "524288.0\n");
}

TEST(Cli, HelpListsDefaultsAndExitCodes) {
  const RunResult top = run_cli({"--help"});
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("Exit codes"), std::string::npos);
  EXPECT_NE(top.out.find("config_error"), std::string::npos);
  const RunResult train = run_cli({"train-toy", "--help"});
  EXPECT_EQ(train.code, 0);
  EXPECT_NE(train.out.find("0.001"), std::string::npos);
  EXPECT_NE(train.out.find("16x1"), std::string::npos);
  EXPECT_NE(train.out.find("20000"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({"count-ops", "--input", "4", "--hidden", "4", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"count-ops", "--input", "4"}).code, 2);
  const RunResult r = run_cli({"count-ops", "--input", "4", "--hidden", "4", "--sparsity", "1.5"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[usage_error]: ", 0), 0u);
}

TEST(Cli, TypedErrorsMapToExitCodes) {
  TempDir dir;
  const RunResult missing = run_cli({"infer", "--bundle", (dir / "none").string(), "--out",
                                     (dir / "o").string(), "--phonemes", "1,2"});
  EXPECT_EQ(missing.code, 5);
  EXPECT_EQ(missing.err.rfind("error[io_error]: ", 0), 0u);
  const RunResult bad_block = run_cli({"bench", "--hidden", "32", "--block", "16by1"});
  EXPECT_EQ(bad_block.code, 3);
}

TEST(Cli, GenerateTrainInferPipeline) {
  TempDir dir;
  const std::string data = (dir / "data").string();
  const std::string model = (dir / "model").string();
  ASSERT_EQ(run_cli({"gen-data", "--out", data, "--count", "6", "--vocab", "8", "--mel", "4"}).code, 0);
  const RunResult tr = run_cli({"train-toy", "--data", data, "--out", model, "--steps", "3", "--postnet-dim",
                                "8", "--decoder-dim", "16", "--attention-dim", "16", "--encoder-dim", "8",
                                "--log-every", "1", "--max-decode-steps", "30"});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "model" / "metrics.csv"));

  const std::string out = (dir / "infer").string();
  const RunResult inf = run_cli({"infer", "--bundle", model, "--out", out, "--phonemes", "1,2,3"});
  ASSERT_EQ(inf.code, 0) << inf.err;
  const auto meta = nlohmann::json::parse(read_file(dir / "infer" / "meta.json"));
  EXPECT_EQ(meta["input_length"], 3);
  const bool truncated = meta["truncated"];
  const double final_mu = meta["final_mu"];
  if (!truncated) {
    EXPECT_GE(final_mu, 4.0);
  }
  EXPECT_LE(meta["stop_step"].get<int>(), 30);
  for (const char* f : {"frames.csv", "frames_pre.csv", "alignment.csv", "alignment.pgm"})
    EXPECT_TRUE(std::filesystem::exists(dir / "infer" / f)) << f;

  const RunResult again = run_cli({"infer", "--bundle", model, "--out", (dir / "infer2").string(), "--data",
                                   data, "--index", "0"});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(run_cli({"infer", "--bundle", model, "--out", out, "--data", data, "--index", "99"}).code, 4);

  ASSERT_EQ(run_cli({"prune", "--bundle", model, "--out", (dir / "pruned").string(), "--sparsity", "0.5"}).code, 0);
  const RunResult ev = run_cli({"eval-robust", "--bundle", model, "--bundle", (dir / "pruned").string(), "--count",
                                "2", "--csv", (dir / "r.csv").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  const std::string csv = read_file(dir / "r.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Cli, UntrainedBundleTruncatesCleanly) {
  TempDir dir;
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run_cli({"gen-data", "--out", data, "--count", "2", "--vocab", "4", "--mel", "4"}).code, 0);
  ASSERT_EQ(run_cli({"train-toy", "--data", data, "--out", (dir / "m").string(), "--steps", "0", "--postnet-dim",
                     "4", "--max-decode-steps", "5", "--gmm-delta-init", "0.001", "--mechanism", "gmmv2b"})
                .code,
            0);
  ASSERT_EQ(run_cli({"infer", "--bundle", (dir / "m").string(), "--out", (dir / "o").string(), "--phonemes",
                     "0,1,2,3,0,1,2,3"})
                .code,
            0);
  const auto meta = nlohmann::json::parse(read_file(dir / "o" / "meta.json"));
  EXPECT_EQ(meta["truncated"], true);
  EXPECT_EQ(meta["stop_step"], 5);
}

TEST(Cli, SameSeedSameDataset) {
  TempDir dir;
  ASSERT_EQ(run_cli({"gen-data", "--out", (dir / "a").string(), "--count", "5", "--seed", "9"}).code, 0);
  ASSERT_EQ(run_cli({"gen-data", "--out", (dir / "b").string(), "--count", "5", "--seed", "9"}).code, 0);
  EXPECT_EQ(read_file(dir / "a" / "frames.bin"), read_file(dir / "b" / "frames.bin"));
  EXPECT_EQ(read_file(dir / "a" / "manifest.json"), read_file(dir / "b" / "manifest.json"));
}

}  // namespace
}  // namespace feather
