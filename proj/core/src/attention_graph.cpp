#include "feather/attention_graph.hpp"

#include <numbers>
#include <string>
#include <vector>

#include "feather/error.hpp"
#include "feather/ops.hpp"

namespace feather {

std::string_view to_string(Mechanism m) {
  return m == Mechanism::kGaussian ? "gaussian" : "gmmv2b";
}

Mechanism parse_mechanism(std::string_view text) {
  if (text == "gaussian") return Mechanism::kGaussian;
  if (text == "gmmv2b" || text == "gmm") return Mechanism::kGmmV2b;
  throw ConfigError("unknown attention mechanism '" + std::string(text) +
                    "' (expected gaussian or gmmv2b)");
}

void AttentionConfig::validate() const {
  if (mechanism == Mechanism::kGmmV2b && components < 1) {
    throw ConfigError("GMMv2b attention needs K >= 1 components, got " +
                      std::to_string(components));
  }
  if (!std::isfinite(initial_mu) || !std::isfinite(delta_bias) || !std::isfinite(sigma_bias)) {
    throw ConfigError("attention config values must be finite");
  }
}

namespace graph {
namespace {

Var positions(Tape& tape, std::size_t length) {
  if (length < 1) throw ContractError("attention over an empty encoder sequence (J < 1)");
  Tensor p(1, length);
  for (std::size_t j = 0; j < length; ++j) p[j] = static_cast<double>(j + 1);
  return tape.constant(std::move(p));
}

// exp(-(pos - mu)^2 / (2 sigma^2)) for scalar mu and sigma.
Var window(Var pos, Var mu, Var sigma) {
  using namespace ops;
  const Var offset = sub(pos, mu);
  const Var spread = scale(square(sigma), 2.0);
  return exp(neg(div(square(offset), spread)));
}

}  // namespace

GaussianStep gaussian_attend(Var intermediates, Var mu_prev, std::size_t length) {
  using namespace ops;
  if (intermediates.rows() != 1 || intermediates.cols() != 2) {
    throw DimensionError("gaussian_attend: intermediates must be [1x2], got " +
                         intermediates.value().shape_string());
  }
  Tape& tape = intermediates.tape();
  const Var pos = positions(tape, length);
  GaussianStep s;
  s.delta = softplus(slice_cols(intermediates, 0, 1));
  s.sigma = softplus(slice_cols(intermediates, 1, 2));
  s.mu = add(mu_prev, s.delta);
  s.alignment = window(pos, s.mu, s.sigma);
  return s;
}

GmmStep gmmv2b_attend(const AttentionConfig& config, Var intermediates, Var mu_prev,
                      std::size_t length) {
  using namespace ops;
  config.validate();
  const auto k = static_cast<std::size_t>(config.components);
  if (intermediates.rows() != 1 || intermediates.cols() != 3 * k) {
    throw DimensionError("gmmv2b_attend: intermediates must be [1x" + std::to_string(3 * k) +
                         "], got " + intermediates.value().shape_string());
  }
  if (mu_prev.rows() != 1 || mu_prev.cols() != k) {
    throw DimensionError("gmmv2b_attend: mu_prev must be [1x" + std::to_string(k) + "]");
  }
  Tape& tape = intermediates.tape();
  const Var pos = positions(tape, length);
  GmmStep s;
  s.omega = softmax(slice_cols(intermediates, 0, k), 1);
  const Var delta = softplus(add_scalar(slice_cols(intermediates, k, 2 * k), config.delta_bias));
  s.sigma = softplus(add_scalar(slice_cols(intermediates, 2 * k, 3 * k), config.sigma_bias));
  s.mu = add(mu_prev, delta);
  const double root_two_pi = std::sqrt(2.0 * std::numbers::pi);
  Var alignment;
  for (std::size_t c = 0; c < k; ++c) {
    const Var mu_c = slice_cols(s.mu, c, c + 1);
    const Var sigma_c = slice_cols(s.sigma, c, c + 1);
    const Var weight = div(slice_cols(s.omega, c, c + 1), scale(sigma_c, root_two_pi));
    const Var term = mul(weight, window(pos, mu_c, sigma_c));
    alignment = c == 0 ? term : add(alignment, term);
  }
  s.alignment = alignment;
  s.mean_position = sum(mul(s.omega, s.mu));
  return s;
}

Var context_vector(Var alignment, Var encoder_outputs) {
  if (alignment.cols() != encoder_outputs.rows()) {
    throw DimensionError("context_vector: alignment " + alignment.value().shape_string() +
                         " does not match encoder outputs " +
                         encoder_outputs.value().shape_string());
  }
  return ops::matmul(alignment, encoder_outputs);
}

}  // namespace graph
}  // namespace feather
