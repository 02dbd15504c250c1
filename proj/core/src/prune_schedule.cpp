#include "feather/prune_schedule.hpp"

#include <cmath>
#include <string>

#include "feather/error.hpp"

namespace feather {

std::string_view to_string(PruneCurve c) { return c == PruneCurve::kCubic ? "cubic" : "linear"; }

PruneCurve parse_prune_curve(std::string_view text) {
  if (text == "cubic") return PruneCurve::kCubic;
  if (text == "linear") return PruneCurve::kLinear;
  throw ConfigError("unknown prune curve '" + std::string(text) + "' (expected cubic or linear)");
}

void PruneSchedule::validate() const {
  if (start_step < 0) throw ConfigError("prune schedule: start_step must be >= 0");
  if (start_step >= end_step) {
    throw ConfigError("prune schedule: start_step (" + std::to_string(start_step) +
                      ") must be < end_step (" + std::to_string(end_step) + ")");
  }
  if (interval < 1) throw ConfigError("prune schedule: interval must be >= 1");
  if (!(target_sparsity >= 0.0 && target_sparsity < 1.0)) {
    throw ConfigError("prune schedule: target sparsity must lie in [0, 1)");
  }
  if (block.rows < 1 || block.cols < 1) throw ConfigError("prune schedule: empty block shape");
}

bool PruneSchedule::is_event(std::int64_t step) const {
  if (step < start_step) return false;
  if (step >= end_step) return step == end_step;
  return (step - start_step) % interval == 0;
}

double PruneSchedule::sparsity_at(std::int64_t step) const {
  validate();
  if (step < 0) throw ContractError("sparsity_at: negative step");
  if (step < start_step) return 0.0;
  if (step >= end_step) return target_sparsity;
  // Hold the value of the most recent pruning event.
  const std::int64_t event = start_step + ((step - start_step) / interval) * interval;
  const double progress =
      static_cast<double>(event - start_step) / static_cast<double>(end_step - start_step);
  if (curve == PruneCurve::kLinear) return target_sparsity * progress;
  const double remaining = 1.0 - progress;
  return target_sparsity * (1.0 - remaining * remaining * remaining);
}

}  // namespace feather
