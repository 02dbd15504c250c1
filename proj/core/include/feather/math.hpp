#pragma once

#include <cmath>
#include <concepts>
#include <limits>

namespace feather {

// ln(1 + e^x) without overflow for large x. Clamped to the smallest positive
// value so the result stays strictly positive even when e^x underflows.
template <std::floating_point T>
T softplus(T x) {
  const T y = x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return y > T(0) ? y : std::numeric_limits<T>::denorm_min();
}

// Inverse of softplus for y > 0: ln(e^y - 1).
template <std::floating_point T>
T softplus_inverse(T y) {
  return y > T(20) ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

template <std::floating_point T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace feather
