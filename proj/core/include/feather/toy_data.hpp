#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "feather/tensor.hpp"

namespace feather {

// Synthetic phoneme -> frame task: every symbol owns a fixed random prototype
// frame that is repeated for its duration, plus Gaussian noise.
struct ToyTaskSpec {
  std::size_t vocab_size = 32;
  std::size_t min_length = 5;
  std::size_t max_length = 20;
  std::size_t frames_per_symbol = 4;
  std::size_t jitter = 0;  // durations drawn uniformly from k +- jitter (min 1)
  std::size_t mel_dim = 16;
  double noise_std = 0.02;
  std::uint64_t seed = 1;
  std::size_t count = 1000;

  void validate() const;
};

struct Utterance {
  std::vector<int> phonemes;
  std::vector<std::size_t> durations;  // frames owned by each symbol
  Tensor frames;                       // [T x mel]
};

struct ToyDataset {
  ToyTaskSpec spec;
  Tensor prototypes;  // [vocab x mel], values in [0, 1)
  std::vector<Utterance> utterances;
};

// Deterministic in (spec); each utterance draws from its own seeded stream so
// the result does not depend on `threads`. threads == 0 reads FEATHER_THREADS.
ToyDataset generate_toy_dataset(const ToyTaskSpec& spec, unsigned threads = 0);

// Moves the last `count` utterances into a second dataset.
std::pair<ToyDataset, ToyDataset> split_dataset(ToyDataset data, std::size_t heldout);

// manifest.json + frames.bin (float32, little-endian).
void save_dataset(const ToyDataset& data, const std::filesystem::path& dir);
ToyDataset load_dataset(const std::filesystem::path& dir);

enum class StressKind { kVeryShort, kVeryLong, kRepeatedSymbol };

std::string_view to_string(StressKind k);
StressKind parse_stress_kind(std::string_view text);

struct StressOptions {
  std::size_t vocab_size = 32;
  std::size_t training_max_length = 20;
  std::size_t count = 10;
  std::uint64_t seed = 7;
};

// very_short: J in 1..3, always including J = 1.
// very_long:  J = 10x the longest training input.
// repeated_symbol: one id repeated, J within the training range.
std::vector<std::vector<int>> stress_suite(StressKind kind, const StressOptions& options);

// FEATHER_THREADS, defaulting to 1.
unsigned threads_from_env();

}  // namespace feather
