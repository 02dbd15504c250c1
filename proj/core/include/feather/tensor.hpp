#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feather {

// Numeric precision of a computation. Values are always held in double
// storage; in F32 mode every stored value is rounded to the nearest float.
enum class Precision : std::uint8_t { kF32, kF64 };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view text);

inline double round_to(double v, Precision p) {
  return p == Precision::kF32 ? static_cast<double>(static_cast<float>(v)) : v;
}

// Dense row-major rank-2 array. Vectors are 1xN rows, scalars are 1x1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, Precision precision = Precision::kF64);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values,
         Precision precision = Precision::kF64);

  static Tensor scalar(double value, Precision precision = Precision::kF64);
  static Tensor row(std::span<const double> values, Precision precision = Precision::kF64);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          Precision precision = Precision::kF64);
  static Tensor identity(std::size_t n, Precision precision = Precision::kF64);
  static Tensor filled(std::size_t rows, std::size_t cols, double value,
                       Precision precision = Precision::kF64);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_scalar() const noexcept { return rows_ == 1 && cols_ == 1; }
  Precision precision() const noexcept { return precision_; }
  bool same_shape(const Tensor& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  // Value of a 1x1 tensor.
  double item() const;

  // Re-rounds all values to `precision` and adopts it.
  Tensor& round(Precision precision);
  bool all_finite() const noexcept;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  Precision precision_ = Precision::kF64;
};

}  // namespace feather
