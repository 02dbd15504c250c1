#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "feather/model_bundle.hpp"
#include "feather/prune_schedule.hpp"
#include "feather/toy_data.hpp"

namespace feather {

struct MetricsRow {
  std::int64_t step = 0;
  double total_loss = 0.0;
  double l1_pre = 0.0;
  double l1_post = 0.0;
  double stop_loss = 0.0;  // mean |mu_T - (J + 1)|
  double mean_mu_T = 0.0;
};

struct PruneEvent {
  std::int64_t step = 0;
  double target = 0.0;
  // Achieved sparsity per pruned parameter, in prunable_parameters() order.
  std::vector<double> achieved;
};

// Called after every update with the step just completed (1-based) and the
// current model; masked weights are already zero at that point.
using StepCallback = std::function<void(std::int64_t step, const ModelBundle& model)>;

struct TrainOptions {
  std::int64_t steps = 1000;
  double learning_rate = 0.05;
  double momentum = 0.9;  // 0 gives plain SGD
  double clip_norm = 1.0;
  std::size_t batch_size = 4;
  std::uint64_t seed = 1;
  // Metrics are averaged over windows of this many steps.
  std::int64_t log_every = 50;
  std::optional<PruneSchedule> prune;
  PruneTargets prune_targets{};
  StepCallback on_step;

  void validate() const;
};

struct TrainResult {
  ModelBundle model;
  // Row 0 is the loss of the initial model before any update.
  std::vector<MetricsRow> metrics;
  std::vector<PruneEvent> prune_events;
};

// Teacher-forced minibatch SGD on the total loss. Utterances are drawn with a
// seeded shuffle; masked weights get zero gradient and stay exactly zero.
// Throws NumericError when the loss or a gradient becomes non-finite.
TrainResult train_toy(const ToyDataset& data, ModelBundle model, const TrainOptions& options);

struct EvalSummary {
  std::size_t utterances = 0;
  double total_loss = 0.0;
  double l1_pre = 0.0;   // mean teacher-forced decoder-output L1
  double l1_post = 0.0;
  double stop_loss = 0.0;
  double mean_mu_T = 0.0;
};

// Teacher-forced losses averaged over `utterances`.
EvalSummary evaluate_teacher_forced(const ModelBundle& model, std::span<const Utterance> utterances);

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

}  // namespace feather
