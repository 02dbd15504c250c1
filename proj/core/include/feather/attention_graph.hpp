#pragma once

#include <cstddef>

#include "feather/attention.hpp"
#include "feather/tape.hpp"

// Tape-recorded attention steps used for teacher-forced training. Values match
// the templates in attention.hpp; these versions also carry gradients.
namespace feather::graph {

struct GaussianStep {
  Var alignment;  // [1 x J]
  Var mu;         // [1 x 1]
  Var sigma;      // [1 x 1]
  Var delta;      // [1 x 1]
};

// intermediates: [1 x 2] = (delta_hat, sigma_hat); mu_prev: [1 x 1].
GaussianStep gaussian_attend(Var intermediates, Var mu_prev, std::size_t length);

struct GmmStep {
  Var alignment;      // [1 x J]
  Var mu;             // [1 x K]
  Var sigma;          // [1 x K]
  Var omega;          // [1 x K]
  Var mean_position;  // [1 x 1], omega-weighted mean of mu
};

// intermediates: [1 x 3K] = (omega_hat | delta_hat | sigma_hat); mu_prev: [1 x K].
GmmStep gmmv2b_attend(const AttentionConfig& config, Var intermediates, Var mu_prev,
                      std::size_t length);

// [1 x J] x [J x D] -> [1 x D].
Var context_vector(Var alignment, Var encoder_outputs);

}  // namespace feather::graph
