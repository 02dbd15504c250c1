#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "feather/model_bundle.hpp"

namespace feather {

struct BenchOptions {
  std::size_t frames = 400;  // frames decoded per timed run
  std::size_t warmup = 2;
  std::size_t repeats = 7;
  std::size_t input_length = 20;
  std::uint64_t seed = 1;
};

struct BenchReport {
  // Architecture of the benchmarked models.
  std::size_t attention_rnn_input = 0;
  std::size_t attention_rnn_dim = 0;
  std::size_t decoder_rnn_input = 0;
  std::size_t decoder_rnn_dim = 0;
  std::size_t mel_dim = 0;
  std::size_t reduction_factor = 0;
  std::string mechanism;
  double target_sparsity = 0.0;
  double achieved_sparsity = 0.0;  // over all pruned kernels
  std::size_t block_rows = 0;
  std::size_t block_cols = 0;
  std::size_t threads = 1;

  std::size_t frames = 0;
  std::size_t decode_steps = 0;
  std::size_t repeats = 0;
  double dense_seconds = 0.0;   // median wall time of one run
  double sparse_seconds = 0.0;
  double dense_frames_per_second = 0.0;
  double sparse_frames_per_second = 0.0;
  double speedup = 0.0;  // dense_seconds / sparse_seconds

  // Multiplies of both decoder-side LSTM steps for one decode step.
  std::uint64_t dense_multiplies = 0;
  std::uint64_t sparse_multiplies = 0;
  double predicted_dense = 0.0;   // count_ops at S = 0
  double predicted_sparse = 0.0;  // count_ops at the target S
  // One block per pruned matrix: the allowed deviation from the prediction.
  double granule = 0.0;
};

// Times the autoregressive decoder loop (attention, both RNNs and the output
// head; no encoder, no post-net) for both models on the same input. Runs
// single-threaded. Throws ConfigError when the models differ in architecture.
BenchReport bench_decoder(const ModelBundle& dense, const ModelBundle& sparse,
                          const BenchOptions& options = {});

std::string format_report(const BenchReport& report);
void write_report_csv(const std::filesystem::path& path, const BenchReport& report);

}  // namespace feather
