#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <gtest/gtest.h>

#include "feather/error.hpp"
#include "feather/trainer.hpp"
#include "temp_dir.hpp"

namespace feather {
namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.vocab_size = 8;
  c.embed_dim = 8;
  c.encoder_dim = 16;
  c.attention_rnn_dim = 16;
  c.decoder_rnn_dim = 32;
  c.postnet_dim = 16;
  c.mel_dim = 8;
  c.delay_frames = 2;
  return c;
}

ToyDataset small_data(std::size_t count, std::uint64_t seed = 4) {
  ToyTaskSpec s;
  s.vocab_size = 8;
  s.min_length = 5;
  s.max_length = 6;
  s.mel_dim = 8;
  s.count = count;
  s.seed = seed;
  return generate_toy_dataset(s, 1);
}

TEST(Trainer, OverfitsSingleExample) {
  const ToyDataset data = small_data(1);
  TrainOptions o;
  o.steps = 4000;
  o.batch_size = 1;
  o.log_every = 100;
  const TrainResult r = train_toy(data, create_model(small_config(), 3), o);
  ASSERT_FALSE(r.metrics.empty());
  const EvalSummary e = evaluate_teacher_forced(r.model, data.utterances);
  EXPECT_LT(e.total_loss, 0.05);
  EXPECT_LT(e.total_loss, r.metrics.front().total_loss);
}

TEST(Trainer, MetricsRowsAndDeterminism) {
  const ToyDataset data = small_data(8);
  TrainOptions o;
  o.steps = 20;
  o.log_every = 5;
  const TrainResult a = train_toy(data, create_model(small_config(), 3), o);
  const TrainResult b = train_toy(data, create_model(small_config(), 3), o);
  ASSERT_EQ(a.metrics.size(), 5u);
  EXPECT_EQ(a.metrics[0].step, 0);
  EXPECT_EQ(a.metrics.back().step, 20);
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    EXPECT_EQ(a.metrics[i].total_loss, b.metrics[i].total_loss);
    const MetricsRow& m = a.metrics[i];
    EXPECT_NEAR(m.total_loss, m.l1_pre + m.l1_post + 0.001 * m.stop_loss, 1e-6);
  }
  for (std::size_t i = 0; i < a.model.params.size(); ++i)
    EXPECT_EQ(a.model.params[i].value, b.model.params[i].value);
}

TEST(Trainer, PruningMasksOnlyGrowAndMaskedWeightsStayZero) {
  const ToyDataset data = small_data(8);
  TrainOptions o;
  o.steps = 120;
  o.log_every = 40;
  PruneSchedule s;
  s.start_step = 20;
  s.interval = 10;
  s.end_step = 100;
  s.target_sparsity = 0.8;
  o.prune = s;
  std::map<std::string, BlockMask> previous;
  std::size_t violations = 0;
  std::size_t checked_steps = 0;
  o.on_step = [&](std::int64_t step, const ModelBundle& model) {
    for (const auto& [name, mask] : model.masks) {
      auto it = previous.find(name);
      if (it != previous.end() && !it->second.masked_subset_of(mask)) ++violations;
      const Tensor& w = model.params.at(name);
      for (std::size_t r = 0; r < w.rows(); ++r)
        for (std::size_t c = 0; c < w.cols(); ++c)
          if (!mask.keeps_element(r, c) && w(r, c) != 0.0) ++violations;
    }
    previous = model.masks;
    if (!model.masks.empty()) ++checked_steps;
    (void)step;
  };
  const TrainResult r = train_toy(data, create_model(small_config(), 3), o);
  EXPECT_EQ(violations, 0u);
  EXPECT_GT(checked_steps, 90u);
  ASSERT_FALSE(r.prune_events.empty());
  double last = 0.0;
  for (const PruneEvent& e : r.prune_events) {
    EXPECT_GE(e.target, last);
    last = e.target;
    for (std::size_t i = 0; i < e.achieved.size(); ++i) {
      const auto& mask = r.model.masks.at(prunable_parameters(o.prune_targets)[i]);
      EXPECT_NEAR(e.achieved[i], e.target, 1.0 / mask.block_count() + 1e-12) << e.step;
    }
  }
  EXPECT_EQ(r.prune_events.back().target, 0.8);
  EXPECT_DOUBLE_EQ(r.model.prune_target, 0.8);
}

TEST(Trainer, DivergenceIsNumericError) {
  const ToyDataset data = small_data(4);
  ModelBundle m = create_model(small_config(), 3);
  m.params.at("output.bias")[0] = std::numeric_limits<double>::infinity();
  TrainOptions o;
  o.steps = 5;
  EXPECT_THROW(train_toy(data, m, o), NumericError);
}

TEST(Trainer, InvalidOptionsAreConfigErrors) {
  const ToyDataset data = small_data(2);
  TrainOptions o;
  o.batch_size = 0;
  EXPECT_THROW(train_toy(data, create_model(small_config(), 3), o), ConfigError);
  o = TrainOptions{};
  o.learning_rate = -1.0;
  EXPECT_THROW(train_toy(data, create_model(small_config(), 3), o), ConfigError);
  ToyDataset mismatched = data;
  mismatched.spec.mel_dim = 4;
  for (auto& u : mismatched.utterances) u.frames = Tensor(u.frames.rows(), 4);
  EXPECT_THROW(train_toy(mismatched, create_model(small_config(), 3), TrainOptions{}), ConfigError);
}

TEST(Trainer, StopLossFallsFromInitialValue) {
  const ToyDataset data = small_data(16);
  ModelConfig c = small_config();
  c.stop_lambda = 0.1;
  TrainOptions o;
  o.steps = 300;
  o.log_every = 50;
  const TrainResult r = train_toy(data, create_model(c, 3), o);
  EXPECT_LT(r.metrics.back().stop_loss, r.metrics.front().stop_loss);
}

TEST(Trainer, MetricsCsv) {
  testing::TempDir dir;
  const std::vector<MetricsRow> rows = {{0, 1.0, 0.5, 0.5, 2.0, 3.0}, {10, 0.5, 0.25, 0.25, 1.0, 4.0}};
  write_metrics_csv(dir / "m.csv", rows);
  const std::string text = testing::read_file(dir / "m.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "step,total_loss,l1_pre,l1_post,stop_loss,mean_mu_T");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

}  // namespace
}  // namespace feather
