#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "feather/bench_decoder.hpp"
#include "feather/block_sparse.hpp"
#include "feather/error.hpp"
#include "temp_dir.hpp"

namespace feather {
namespace {

ModelConfig bench_config(std::size_t hidden = 64) {
  ModelConfig c;
  c.encoder_dim = 32;
  c.attention_rnn_dim = hidden;
  c.decoder_rnn_dim = hidden;
  c.postnet_dim = 8;
  c.mel_dim = 16;
  return c;
}

BenchOptions quick() {
  BenchOptions o;
  o.frames = 100;
  o.repeats = 5;
  o.warmup = 1;
  return o;
}

TEST(Bench, SelfComparisonIsNearOne) {
  const ModelBundle m = create_model(bench_config(), 1);
  const BenchReport r = bench_decoder(m, m, quick());
  EXPECT_GT(r.speedup, 0.8);
  EXPECT_LT(r.speedup, 1.25);
  EXPECT_EQ(r.dense_multiplies, r.sparse_multiplies);
  EXPECT_EQ(r.decode_steps, 50u);
  EXPECT_EQ(r.threads, 1u);
}

TEST(Bench, ZeroSparsityMatchesDense) {
  const ModelBundle dense = create_model(bench_config(), 1);
  const ModelBundle sparse = prune_bundle(dense, 0.0, {16, 1});
  const BenchReport r = bench_decoder(dense, sparse, quick());
  EXPECT_GT(r.speedup, 0.8);
  EXPECT_LT(r.speedup, 1.2);
  EXPECT_EQ(r.achieved_sparsity, 0.0);
}

TEST(Bench, MultiplyCountsFollowPrediction) {
  const ModelBundle dense = create_model(bench_config(128), 1);
  const ModelBundle sparse = prune_bundle(dense, 0.9, {16, 1});
  BenchOptions o = quick();
  o.repeats = 1;
  const BenchReport r = bench_decoder(dense, sparse, o);
  const double att = count_ops(r.attention_rnn_input, 128, 0.0);
  const double dec = count_ops(r.decoder_rnn_input, 128, 0.0);
  EXPECT_EQ(static_cast<double>(r.dense_multiplies), att + dec);
  EXPECT_DOUBLE_EQ(r.predicted_dense, att + dec);
  EXPECT_LE(std::fabs(static_cast<double>(r.sparse_multiplies) - r.predicted_sparse), r.granule);
  EXPECT_EQ(r.granule, 4 * 16.0);
  EXPECT_NEAR(static_cast<double>(r.dense_multiplies) / r.sparse_multiplies, 10.0, 0.5);
  EXPECT_GT(r.speedup, 1.0);
}

TEST(Bench, ArchitectureMismatchIsConfigError) {
  const ModelBundle a = create_model(bench_config(64), 1);
  const ModelBundle b = create_model(bench_config(32), 1);
  EXPECT_THROW(bench_decoder(a, b, quick()), ConfigError);
  BenchOptions bad = quick();
  bad.repeats = 0;
  EXPECT_THROW(bench_decoder(a, a, bad), ConfigError);
}

TEST(Bench, ReportFormats) {
  const ModelBundle m = create_model(bench_config(32), 1);
  BenchOptions o = quick();
  o.repeats = 1;
  const BenchReport r = bench_decoder(m, prune_bundle(m, 0.5, {16, 1}), o);
  const std::string text = format_report(r);
  EXPECT_NE(text.find("speedup"), std::string::npos);
  testing::TempDir dir;
  write_report_csv(dir / "b.csv", r);
  const std::string csv = testing::read_file(dir / "b.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

}  // namespace
}  // namespace feather
