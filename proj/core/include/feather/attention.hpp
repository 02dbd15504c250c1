#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feather/error.hpp"
#include "feather/math.hpp"

// Location-based attention over encoder positions j = 1..J.
//
// Gaussian:  alpha_j = exp(-(j - mu)^2 / (2 sigma^2)),  mu_i = mu_{i-1} + delta_i
// GMMv2b:    alpha_j = sum_k (omega_k / Z_k) exp(-(j - mu_k)^2 / (2 sigma_k^2)),
//            Z_k = sqrt(2 pi sigma_k^2), omega = softmax, delta/sigma = softplus.
//
// Positions are 1-based at this boundary; alignment vectors are stored
// 0-based, so weights[j - 1] belongs to position j.
namespace feather {

enum class Mechanism { kGaussian, kGmmV2b };

std::string_view to_string(Mechanism m);
Mechanism parse_mechanism(std::string_view text);

struct AttentionConfig {
  Mechanism mechanism = Mechanism::kGaussian;
  int components = 5;
  double initial_mu = 0.0;
  // Constant offsets added to the projected intermediates of GMMv2b so that
  // softplus(delta_bias) = 1 and softplus(sigma_bias) = 10.
  double delta_bias = softplus_inverse(1.0);
  double sigma_bias = softplus_inverse(10.0);

  // Number of projected intermediates per decode step.
  std::size_t projection_outputs() const {
    return mechanism == Mechanism::kGaussian ? 2 : 3 * static_cast<std::size_t>(components);
  }
  void validate() const;
};

template <std::floating_point T>
struct GaussianAttentionState {
  T mu = T(0);
  T sigma = T(0);
  T delta = T(0);
  int step = 0;
};

template <std::floating_point T>
struct GmmAttentionState {
  std::vector<T> mu;
  std::vector<T> sigma;
  std::vector<T> delta;
  std::vector<T> omega;
  std::vector<T> normalizer;
  int step = 0;

  std::size_t components() const { return mu.size(); }
  // omega-weighted mean position; drives stopping for this mechanism.
  T mean_position() const {
    T m = T(0);
    for (std::size_t k = 0; k < mu.size(); ++k) m += omega[k] * mu[k];
    return m;
  }
};

template <std::floating_point T>
struct AlignmentVector {
  std::vector<T> weights;
  Mechanism mechanism = Mechanism::kGaussian;
  int step = 0;
};

// Affine map from the attention-RNN state to the intermediates.
// weight is row-major [outputs x query_dim].
template <std::floating_point T>
struct AttentionProjection {
  std::size_t outputs = 0;
  std::size_t query_dim = 0;
  std::vector<T> weight;
  std::vector<T> bias;

  void apply(std::span<const T> query, std::span<T> out) const {
    if (query.size() != query_dim || out.size() != outputs) {
      throw DimensionError("attention projection expects query of " +
                           std::to_string(query_dim) + ", got " +
                           std::to_string(query.size()));
    }
    for (std::size_t o = 0; o < outputs; ++o) {
      T acc = T(0);
      const T* w = weight.data() + o * query_dim;
      for (std::size_t q = 0; q < query_dim; ++q) acc += w[q] * query[q];
      out[o] = acc + bias[o];
    }
  }
};

template <std::floating_point T>
T gaussian_weight(T position, T mu, T sigma) {
  const T d = position - mu;
  return std::exp(-(d * d) / (T(2) * sigma * sigma));
}

template <std::floating_point T>
void gaussian_alignment(T mu, T sigma, std::span<T> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = gaussian_weight(static_cast<T>(j + 1), mu, sigma);
  }
}

template <std::floating_point T>
std::vector<T> gaussian_alignment(T mu, T sigma, std::size_t length) {
  std::vector<T> out(length);
  gaussian_alignment<T>(mu, sigma, out);
  return out;
}

template <std::floating_point T>
void gmm_alignment(const GmmAttentionState<T>& s, std::span<T> out) {
  for (std::size_t j = 0; j < out.size(); ++j) {
    T acc = T(0);
    const T pos = static_cast<T>(j + 1);
    for (std::size_t k = 0; k < s.components(); ++k) {
      acc += s.omega[k] / s.normalizer[k] * gaussian_weight(pos, s.mu[k], s.sigma[k]);
    }
    out[j] = acc;
  }
}

template <std::floating_point T>
GaussianAttentionState<T> initial_gaussian_state(const AttentionConfig& config) {
  config.validate();
  GaussianAttentionState<T> s;
  s.mu = static_cast<T>(config.initial_mu);
  return s;
}

template <std::floating_point T>
GmmAttentionState<T> initial_gmm_state(const AttentionConfig& config) {
  config.validate();
  const auto k = static_cast<std::size_t>(config.components);
  GmmAttentionState<T> s;
  s.mu.assign(k, static_cast<T>(config.initial_mu));
  s.sigma.assign(k, T(0));
  s.delta.assign(k, T(0));
  s.omega.assign(k, T(1) / static_cast<T>(k));
  s.normalizer.assign(k, T(1));
  return s;
}

namespace detail {
inline void check_length(std::size_t length) {
  if (length < 1) throw ContractError("attention over an empty encoder sequence (J < 1)");
}
template <std::floating_point T>
void check_finite(std::span<const T> query) {
  for (T v : query) {
    if (!std::isfinite(v)) throw NumericError("non-finite attention query");
  }
}
}  // namespace detail

// Advances the Gaussian state one decode step and writes alpha into `weights`
// (length J). `intermediates` holds the (delta_hat, sigma_hat) pair.
template <std::floating_point T>
void gaussian_step(const GaussianAttentionState<T>& prev, T delta_hat, T sigma_hat,
                   GaussianAttentionState<T>& next, std::span<T> weights) {
  next.delta = softplus(delta_hat);
  next.sigma = softplus(sigma_hat);
  next.mu = prev.mu + next.delta;
  next.step = prev.step + 1;
  gaussian_alignment<T>(next.mu, next.sigma, weights);
}

template <std::floating_point T>
struct GaussianAttendResult {
  AlignmentVector<T> alignment;
  GaussianAttentionState<T> state;
};

template <std::floating_point T>
GaussianAttendResult<T> gaussian_attend(const AttentionProjection<T>& projection,
                                        const GaussianAttentionState<T>& prev,
                                        std::span<const T> query, std::size_t length) {
  detail::check_length(length);
  detail::check_finite(query);
  if (projection.outputs != 2) throw ConfigError("Gaussian attention needs 2 projected outputs");
  T hat[2];
  projection.apply(query, hat);
  GaussianAttendResult<T> r;
  r.alignment.weights.resize(length);
  r.alignment.mechanism = Mechanism::kGaussian;
  gaussian_step(prev, hat[0], hat[1], r.state, std::span<T>(r.alignment.weights));
  r.alignment.step = r.state.step;
  return r;
}

// intermediates laid out as [omega_hat(K) | delta_hat(K) | sigma_hat(K)].
template <std::floating_point T>
void gmm_step(const AttentionConfig& config, const GmmAttentionState<T>& prev,
              std::span<const T> intermediates, GmmAttentionState<T>& next,
              std::span<T> weights) {
  const std::size_t k = prev.components();
  next.mu.resize(k);
  next.sigma.resize(k);
  next.delta.resize(k);
  next.omega.resize(k);
  next.normalizer.resize(k);
  T peak = intermediates[0];
  for (std::size_t c = 1; c < k; ++c) peak = std::max(peak, intermediates[c]);
  T total = T(0);
  for (std::size_t c = 0; c < k; ++c) {
    next.omega[c] = std::exp(intermediates[c] - peak);
    total += next.omega[c];
  }
  const T root_two_pi = std::sqrt(T(2) * std::numbers::pi_v<T>);
  for (std::size_t c = 0; c < k; ++c) {
    next.omega[c] /= total;
    next.delta[c] = softplus(intermediates[k + c] + static_cast<T>(config.delta_bias));
    next.sigma[c] = softplus(intermediates[2 * k + c] + static_cast<T>(config.sigma_bias));
    next.normalizer[c] = root_two_pi * next.sigma[c];
    next.mu[c] = prev.mu[c] + next.delta[c];
  }
  next.step = prev.step + 1;
  gmm_alignment(next, weights);
}

template <std::floating_point T>
struct GmmAttendResult {
  AlignmentVector<T> alignment;
  GmmAttentionState<T> state;
};

template <std::floating_point T>
GmmAttendResult<T> gmmv2b_attend(const AttentionProjection<T>& projection,
                                 const AttentionConfig& config,
                                 const GmmAttentionState<T>& prev, std::span<const T> query,
                                 std::size_t length) {
  detail::check_length(length);
  detail::check_finite(query);
  if (prev.components() < 1) throw ConfigError("GMM attention needs K >= 1");
  if (projection.outputs != 3 * prev.components()) {
    throw ConfigError("GMM attention needs 3K projected outputs");
  }
  std::vector<T> hat(projection.outputs);
  projection.apply(query, hat);
  GmmAttendResult<T> r;
  r.alignment.weights.resize(length);
  r.alignment.mechanism = Mechanism::kGmmV2b;
  gmm_step<T>(config, prev, hat, r.state, std::span<T>(r.alignment.weights));
  r.alignment.step = r.state.step;
  return r;
}

// c = sum_j alpha_j h_j for encoder outputs h laid out row-major [J x D].
template <std::floating_point T>
void context_vector(std::span<const T> alignment, std::span<const T> encoder_outputs,
                    std::size_t dim, std::span<T> out) {
  if (dim == 0 || encoder_outputs.size() != alignment.size() * dim) {
    throw DimensionError("context_vector: alignment of length " +
                         std::to_string(alignment.size()) + " against encoder outputs of " +
                         std::to_string(encoder_outputs.size()) + " values (dim " +
                         std::to_string(dim) + ")");
  }
  if (out.size() != dim) throw DimensionError("context_vector: output size mismatch");
  std::fill(out.begin(), out.end(), T(0));
  for (std::size_t j = 0; j < alignment.size(); ++j) {
    const T a = alignment[j];
    const T* h = encoder_outputs.data() + j * dim;
    for (std::size_t d = 0; d < dim; ++d) out[d] += a * h[d];
  }
}

template <std::floating_point T>
std::vector<T> context_vector(const AlignmentVector<T>& alignment,
                              std::span<const T> encoder_outputs, std::size_t dim) {
  std::vector<T> out(dim);
  context_vector<T>(alignment.weights, encoder_outputs, dim, out);
  return out;
}

}  // namespace feather
