#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "feather/error.hpp"
#include "feather/math.hpp"
#include "feather/prune_schedule.hpp"

namespace feather {

// Counts scalar multiplies performed by the matvec kernels.
struct MultiplyCounter {
  std::uint64_t multiplies = 0;
};

// Block-level keep mask over a rows x cols matrix; 1 = block stored.
class BlockMask {
 public:
  BlockMask() = default;
  // All blocks kept. Throws ConfigError when dims do not divide evenly.
  BlockMask(std::size_t rows, std::size_t cols, BlockShape shape);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  BlockShape shape() const { return shape_; }
  std::size_t block_rows() const { return block_rows_; }
  std::size_t block_cols() const { return block_cols_; }
  std::size_t block_count() const { return keep_.size(); }
  bool empty() const { return keep_.empty(); }

  bool kept(std::size_t block_row, std::size_t block_col) const {
    return keep_[block_row * block_cols_ + block_col] != 0;
  }
  bool kept_index(std::size_t block) const { return keep_[block] != 0; }
  void set_index(std::size_t block, bool keep) { keep_[block] = keep ? 1 : 0; }
  // Element-level view aligned to the dense layout.
  bool keeps_element(std::size_t r, std::size_t c) const {
    return kept(r / shape_.rows, c / shape_.cols);
  }

  std::size_t masked_count() const;
  std::size_t kept_count() const { return block_count() - masked_count(); }
  double achieved_sparsity() const;
  // Every block masked here is also masked in `other`.
  bool masked_subset_of(const BlockMask& other) const;

  // Zeroes masked entries of a row-major matrix of this mask's dims.
  template <std::floating_point T>
  void apply(std::span<T> row_major) const {
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        if (!keeps_element(r, c)) row_major[r * cols_ + c] = T(0);
  }

  // Bitset, block-row-major, least significant bit first.
  std::vector<std::uint8_t> to_bits() const;
  static BlockMask from_bits(std::size_t rows, std::size_t cols, BlockShape shape,
                             std::span<const std::uint8_t> bits);

  friend bool operator==(const BlockMask&, const BlockMask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  BlockShape shape_{};
  std::size_t block_rows_ = 0;
  std::size_t block_cols_ = 0;
  std::vector<std::uint8_t> keep_;
};

// ceil(fraction * n_blocks), tolerant of rounding just above an integer.
std::size_t masked_block_target(double fraction, std::size_t n_blocks);

// Grows `current` until masked_block_target(target, n) blocks are masked,
// masking the unmasked blocks with the smallest score first; ties go to the
// lower (block_row, block_col). Throws ContractError if that would unmask.
BlockMask grow_mask(std::span<const double> block_scores, const BlockMask& current,
                    double target_fraction);

// Dense matrix stored column-major so y += W x runs as contiguous column updates.
// Each output row accumulates its terms in ascending column order.
template <std::floating_point T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, std::span<const T> row_major)
      : rows_(rows), cols_(cols), col_major_(rows * cols) {
    if (row_major.size() != rows * cols) {
      throw DimensionError("dense matrix [" + std::to_string(rows) + "x" + std::to_string(cols) +
                           "] given " + std::to_string(row_major.size()) + " values");
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) col_major_[c * rows + r] = row_major[r * cols + c];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void multiply_accumulate(std::span<const T> x, std::span<T> y,
                           MultiplyCounter* counter = nullptr) const {
    check(x, y);
    const T* w = col_major_.data();
    T* out = y.data();
    for (std::size_t c = 0; c < cols_; ++c, w += rows_) {
      const T xc = x[c];
      for (std::size_t r = 0; r < rows_; ++r) out[r] += w[r] * xc;
    }
    if (counter) counter->multiplies += rows_ * cols_;
  }

  std::vector<T> to_row_major() const {
    std::vector<T> out(rows_ * cols_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out[r * cols_ + c] = col_major_[c * rows_ + r];
    return out;
  }

 private:
  void check(std::span<const T> x, std::span<T> y) const {
    if (x.size() != cols_ || y.size() != rows_) {
      throw ContractError("matvec: matrix [" + std::to_string(rows_) + "x" +
                          std::to_string(cols_) + "] with x of " + std::to_string(x.size()) +
                          " and y of " + std::to_string(y.size()));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> col_major_;
};

// Block-sparse matrix: stored blocks listed block-row-major with explicit
// column indices (CSR over blocks). Values within a block are row-major.
template <std::floating_point T>
class BlockSparseMatrix {
 public:
  BlockSparseMatrix() = default;

  // Keeps the blocks marked in `mask`; values of masked blocks are dropped.
  static BlockSparseMatrix from_dense(std::span<const T> row_major, const BlockMask& mask) {
    BlockSparseMatrix m;
    m.mask_ = mask;
    const std::size_t rows = mask.rows(), cols = mask.cols();
    if (row_major.size() != rows * cols) {
      throw DimensionError("block-sparse matrix: mask dims do not match dense values");
    }
    const BlockShape s = mask.shape();
    m.row_start_.assign(mask.block_rows() + 1, 0);
    for (std::size_t br = 0; br < mask.block_rows(); ++br) {
      for (std::size_t bc = 0; bc < mask.block_cols(); ++bc) {
        if (!mask.kept(br, bc)) continue;
        m.block_col_.push_back(static_cast<std::uint32_t>(bc));
        for (std::size_t i = 0; i < s.rows; ++i)
          for (std::size_t j = 0; j < s.cols; ++j)
            m.values_.push_back(row_major[(br * s.rows + i) * cols + bc * s.cols + j]);
      }
      m.row_start_[br + 1] = static_cast<std::uint32_t>(m.block_col_.size());
    }
    return m;
  }

  // Rebuilds from stored block values laid out as produced by from_dense.
  static BlockSparseMatrix from_blocks(const BlockMask& mask, std::span<const T> block_values) {
    if (block_values.size() != mask.kept_count() * mask.shape().size()) {
      throw DimensionError("block-sparse matrix: expected " +
                           std::to_string(mask.kept_count() * mask.shape().size()) +
                           " block values, got " + std::to_string(block_values.size()));
    }
    std::vector<T> dense(mask.rows() * mask.cols(), T(0));
    const BlockShape s = mask.shape();
    std::size_t at = 0;
    for (std::size_t br = 0; br < mask.block_rows(); ++br)
      for (std::size_t bc = 0; bc < mask.block_cols(); ++bc) {
        if (!mask.kept(br, bc)) continue;
        for (std::size_t i = 0; i < s.rows; ++i)
          for (std::size_t j = 0; j < s.cols; ++j)
            dense[(br * s.rows + i) * mask.cols() + bc * s.cols + j] = block_values[at++];
      }
    return from_dense(dense, mask);
  }

  std::size_t rows() const { return mask_.rows(); }
  std::size_t cols() const { return mask_.cols(); }
  BlockShape block_shape() const { return mask_.shape(); }
  const BlockMask& mask() const { return mask_; }
  std::size_t stored_blocks() const { return block_col_.size(); }
  std::span<const T> block_values() const { return values_; }
  double achieved_sparsity() const { return mask_.achieved_sparsity(); }

  // Masked dense equivalent, row-major.
  std::vector<T> to_dense() const {
    std::vector<T> dense(rows() * cols(), T(0));
    const BlockShape s = block_shape();
    std::size_t at = 0;
    for (std::size_t br = 0; br + 1 < row_start_.size(); ++br)
      for (std::uint32_t b = row_start_[br]; b < row_start_[br + 1]; ++b)
        for (std::size_t i = 0; i < s.rows; ++i)
          for (std::size_t j = 0; j < s.cols; ++j)
            dense[(br * s.rows + i) * cols() + block_col_[b] * s.cols + j] = values_[at++];
    return dense;
  }

  // y += W x, visiting stored blocks only.
  void multiply_accumulate(std::span<const T> x, std::span<T> y,
                           MultiplyCounter* counter = nullptr) const {
    if (x.size() != cols() || y.size() != rows()) {
      throw ContractError("sparse_matvec: matrix [" + std::to_string(rows()) + "x" +
                          std::to_string(cols()) + "] with x of " + std::to_string(x.size()) +
                          " and y of " + std::to_string(y.size()));
    }
    const BlockShape s = block_shape();
    const T* v = values_.data();
    if (s.cols == 1) {
      for (std::size_t br = 0; br + 1 < row_start_.size(); ++br) {
        T* out = y.data() + br * s.rows;
        for (std::uint32_t b = row_start_[br]; b < row_start_[br + 1]; ++b, v += s.rows) {
          const T xc = x[block_col_[b]];
          for (std::size_t i = 0; i < s.rows; ++i) out[i] += v[i] * xc;
          if (counter) counter->multiplies += s.rows;
        }
      }
      return;
    }
    for (std::size_t br = 0; br + 1 < row_start_.size(); ++br) {
      T* out = y.data() + br * s.rows;
      for (std::uint32_t b = row_start_[br]; b < row_start_[br + 1]; ++b) {
        const T* xb = x.data() + block_col_[b] * s.cols;
        for (std::size_t i = 0; i < s.rows; ++i, v += s.cols) {
          T acc = out[i];
          for (std::size_t j = 0; j < s.cols; ++j) acc += v[j] * xb[j];
          out[i] = acc;
        }
        if (counter) counter->multiplies += s.size();
      }
    }
  }

 private:
  BlockMask mask_;
  std::vector<std::uint32_t> row_start_;
  std::vector<std::uint32_t> block_col_;
  std::vector<T> values_;
};

// y = W x for a block-sparse W.
template <std::floating_point T>
std::vector<T> sparse_matvec(const BlockSparseMatrix<T>& m, std::span<const T> v,
                             MultiplyCounter* counter = nullptr) {
  std::vector<T> y(m.rows(), T(0));
  m.multiply_accumulate(v, y, counter);
  return y;
}

// Mean |w| over each block, block-row-major.
template <std::floating_point T>
std::vector<double> block_magnitudes(std::span<const T> row_major, std::size_t rows,
                                     std::size_t cols, BlockShape shape) {
  const BlockMask layout(rows, cols, shape);
  if (row_major.size() != rows * cols) throw DimensionError("block_magnitudes: size mismatch");
  std::vector<double> scores(layout.block_count(), 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      scores[(r / shape.rows) * layout.block_cols() + c / shape.cols] +=
          std::fabs(static_cast<double>(row_major[r * cols + c]));
  for (double& s : scores) s /= static_cast<double>(shape.size());
  return scores;
}

// Magnitude pruning of a dense row-major matrix to `target_fraction` of its
// blocks. An empty `current` mask means nothing is masked yet.
template <std::floating_point T>
BlockSparseMatrix<T> prune_to(std::span<const T> row_major, std::size_t rows, std::size_t cols,
                              const BlockMask& current, double target_fraction,
                              BlockShape shape) {
  const BlockMask start = current.empty() ? BlockMask(rows, cols, shape) : current;
  if (start.rows() != rows || start.cols() != cols || !(start.shape() == shape)) {
    throw ConfigError("prune_to: current mask does not match matrix dims or block shape");
  }
  const BlockMask next =
      grow_mask(block_magnitudes<T>(row_major, rows, cols, shape), start, target_fraction);
  return BlockSparseMatrix<T>::from_dense(row_major, next);
}

// Either dense or block-sparse weights behind one matvec interface.
template <std::floating_point T>
class LinearKernel {
 public:
  LinearKernel() = default;
  explicit LinearKernel(DenseMatrix<T> m) : impl_(std::move(m)) {}
  explicit LinearKernel(BlockSparseMatrix<T> m) : impl_(std::move(m)) {}

  std::size_t rows() const {
    return std::visit([](const auto& m) { return m.rows(); }, impl_);
  }
  std::size_t cols() const {
    return std::visit([](const auto& m) { return m.cols(); }, impl_);
  }
  bool is_sparse() const { return std::holds_alternative<BlockSparseMatrix<T>>(impl_); }
  const BlockSparseMatrix<T>* sparse() const { return std::get_if<BlockSparseMatrix<T>>(&impl_); }

  void multiply_accumulate(std::span<const T> x, std::span<T> y,
                           MultiplyCounter* counter = nullptr) const {
    std::visit([&](const auto& m) { m.multiply_accumulate(x, y, counter); }, impl_);
  }

 private:
  std::variant<DenseMatrix<T>, BlockSparseMatrix<T>> impl_;
};

// LSTM cell weights, gate rows stacked [input, forget, cell, output].
template <std::floating_point T>
struct LstmWeights {
  LinearKernel<T> input;      // [4H x I]
  LinearKernel<T> recurrent;  // [4H x H]
  std::vector<T> bias;        // [4H]

  std::size_t hidden() const { return recurrent.cols(); }
  std::size_t input_dim() const { return input.cols(); }
};

template <std::floating_point T>
struct LstmState {
  std::vector<T> h;
  std::vector<T> c;
};

// One LSTM step into caller-provided buffers. `gates` needs 4H entries.
// h_out/c_out may not alias h_prev/c_prev.
template <std::floating_point T>
void lstm_step_into(const LstmWeights<T>& w, std::span<const T> x, std::span<const T> h_prev,
                    std::span<const T> c_prev, std::span<T> h_out, std::span<T> c_out,
                    std::span<T> gates, MultiplyCounter* counter = nullptr) {
  const std::size_t hidden = w.hidden();
  if (w.input.rows() != 4 * hidden || w.recurrent.rows() != 4 * hidden ||
      w.bias.size() != 4 * hidden) {
    throw ContractError("lstm step: inconsistent gate dimensions");
  }
  if (h_prev.size() != hidden || c_prev.size() != hidden || h_out.size() != hidden ||
      c_out.size() != hidden || gates.size() != 4 * hidden) {
    throw ContractError("lstm step: state size does not match hidden size " +
                        std::to_string(hidden));
  }
  std::fill(gates.begin(), gates.end(), T(0));
  w.input.multiply_accumulate(x, gates, counter);
  w.recurrent.multiply_accumulate(h_prev, gates, counter);
  for (std::size_t k = 0; k < hidden; ++k) {
    const T i = sigmoid(gates[k] + w.bias[k]);
    const T f = sigmoid(gates[hidden + k] + w.bias[hidden + k]);
    const T g = std::tanh(gates[2 * hidden + k] + w.bias[2 * hidden + k]);
    const T o = sigmoid(gates[3 * hidden + k] + w.bias[3 * hidden + k]);
    const T c = f * c_prev[k] + i * g;
    c_out[k] = c;
    h_out[k] = o * std::tanh(c);
  }
}

template <std::floating_point T>
LstmState<T> sparse_lstm_step(const LstmWeights<T>& w, std::span<const T> x,
                              const LstmState<T>& prev, MultiplyCounter* counter = nullptr) {
  const std::size_t hidden = w.hidden();
  LstmState<T> next{std::vector<T>(hidden), std::vector<T>(hidden)};
  std::vector<T> gates(4 * hidden);
  lstm_step_into<T>(w, x, prev.h, prev.c, next.h, next.c, gates, counter);
  return next;
}

// Main multiply count of one sparsified LSTM layer: 4 (1 - S) (I H + H^2).
double count_ops(std::size_t input_dim, std::size_t hidden, double sparsity);

}  // namespace feather
