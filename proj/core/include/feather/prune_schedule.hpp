#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace feather {

enum class PruneCurve { kCubic, kLinear };

std::string_view to_string(PruneCurve c);
PruneCurve parse_prune_curve(std::string_view text);

struct BlockShape {
  std::size_t rows = 16;
  std::size_t cols = 1;
  std::size_t size() const { return rows * cols; }
  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

// Gradual magnitude pruning: nothing before start_step, then a pruning event
// every `interval` steps that raises the target along `curve` until
// `target_sparsity` is reached at `end_step`.
struct PruneSchedule {
  std::int64_t start_step = 20000;
  std::int64_t interval = 500;
  std::int64_t end_step = 200000;
  double target_sparsity = 0.9;
  BlockShape block{};
  PruneCurve curve = PruneCurve::kCubic;

  void validate() const;

  // Target fraction of masked weights in force at `step`.
  double sparsity_at(std::int64_t step) const;
  // True when a pruning event fires at `step` (start_step itself included).
  bool is_event(std::int64_t step) const;
};

}  // namespace feather
