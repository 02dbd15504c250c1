#include "feather/tensor.hpp"

#include <cmath>

#include "feather/error.hpp"

namespace feather {

std::string_view to_string(Precision p) {
  return p == Precision::kF32 ? "f32" : "f64";
}

Precision parse_precision(std::string_view text) {
  if (text == "f32" || text == "float32" || text == "32") return Precision::kF32;
  if (text == "f64" || text == "float64" || text == "64") return Precision::kF64;
  throw ConfigError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

Tensor::Tensor(std::size_t rows, std::size_t cols, Precision precision)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0), precision_(precision) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
               Precision precision)
    : rows_(rows), cols_(cols), data_(std::move(values)), precision_(precision) {
  if (data_.size() != rows * cols) {
    throw DimensionError("tensor of shape [" + std::to_string(rows) + "x" +
                         std::to_string(cols) + "] given " +
                         std::to_string(data_.size()) + " values");
  }
  if (precision_ == Precision::kF32) {
    for (double& v : data_) v = round_to(v, precision_);
  }
}

Tensor Tensor::scalar(double value, Precision precision) {
  return Tensor(1, 1, {value}, precision);
}

Tensor Tensor::row(std::span<const double> values, Precision precision) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()),
                precision);
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows,
                         Precision precision) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(values), precision);
}

Tensor Tensor::identity(std::size_t n, Precision precision) {
  Tensor t(n, n, precision);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value, Precision precision) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, value), precision);
}

double Tensor::item() const {
  if (!is_scalar()) {
    throw ContractError("item() on non-scalar tensor " + shape_string());
  }
  return data_[0];
}

Tensor& Tensor::round(Precision precision) {
  precision_ = precision;
  if (precision == Precision::kF32) {
    for (double& v : data_) v = round_to(v, precision);
  }
  return *this;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

}  // namespace feather
