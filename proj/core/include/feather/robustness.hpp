#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feather/decode_trace.hpp"
#include "feather/model_bundle.hpp"

namespace feather {

inline constexpr double kCoverageThreshold = 0.3;
inline constexpr double kStallAdvance = 0.01;

// Fraction of positions 1..J whose weight never exceeds 0.3 in any step.
double coverage_error(const DecodeTrace& trace);

// Fraction of decode steps lying in a run of more than `3 * frames_per_symbol`
// consecutive steps whose position advances by less than 0.01.
double repetition_proxy(const DecodeTrace& trace, std::size_t frames_per_symbol);

struct RobustnessRecord {
  std::size_t input_length = 0;
  std::size_t steps = 0;
  bool terminated = false;
  double coverage_error = 0.0;
  double repetition = 0.0;
};

struct RobustnessSummary {
  std::string label;
  std::vector<RobustnessRecord> records;
  double non_termination = 0.0;  // fraction of inputs hitting the step budget
  double coverage_error = 0.0;   // mean over inputs
  double repetition = 0.0;       // mean over inputs

  // non_termination + coverage_error + repetition; lower is better.
  double aggregate() const { return non_termination + coverage_error + repetition; }
};

// Free-running inference over every input with a budget of
// ceil(3 * k * J / r) decode steps, k = frames_per_symbol.
RobustnessSummary robustness_eval(const ModelBundle& model, std::span<const std::vector<int>> suite,
                                  std::size_t frames_per_symbol, std::string label = {});

// Header plus one row per summary:
// model,inputs,non_termination,coverage_error,repetition_proxy,aggregate
void write_robustness_csv(const std::filesystem::path& path, std::span<const RobustnessSummary> rows);

}  // namespace feather
