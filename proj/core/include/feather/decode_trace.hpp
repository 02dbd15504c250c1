#pragma once

#include <cstddef>
#include <vector>

#include "feather/attention.hpp"
#include "feather/tensor.hpp"

namespace feather {

// Record of one decoding run (teacher-forced or free-running).
struct DecodeTrace {
  Mechanism mechanism = Mechanism::kGaussian;
  std::size_t input_length = 0;  // J
  double initial_mu = 0.0;
  // One alignment (length J) per decode step.
  std::vector<std::vector<double>> alignments;
  // Per-step attention position: mu for Gaussian, the omega-weighted mean of
  // the component means for GMMv2b. Drives the stop rule.
  std::vector<double> mu;
  std::vector<double> sigma;  // Gaussian width per step (empty for GMMv2b)
  Tensor y_pre;               // decoder output frames [T x mel]
  Tensor y_post;              // raw post-net output [T x mel]; y_post[i + d] estimates frame i
  Tensor y_out;               // delay-compensated post-net frames [T x mel]
  std::size_t stop_step = 0;  // decode steps executed
  bool truncated = false;     // hit the step budget before the stop rule fired

  std::size_t steps() const { return mu.size(); }
  bool empty() const { return mu.empty(); }
  double final_mu() const { return mu.back(); }
};

}  // namespace feather
