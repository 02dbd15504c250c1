#include <algorithm>
#include <cmath>
#include <numeric>

#include "feather/block_sparse.hpp"

namespace feather {

BlockMask::BlockMask(std::size_t rows, std::size_t cols, BlockShape shape)
    : rows_(rows), cols_(cols), shape_(shape) {
  if (shape.rows == 0 || shape.cols == 0) throw ConfigError("block shape must be non-empty");
  if (rows % shape.rows != 0 || cols % shape.cols != 0) {
    throw ConfigError("matrix [" + std::to_string(rows) + "x" + std::to_string(cols) +
                      "] is not divisible into " + std::to_string(shape.rows) + "x" +
                      std::to_string(shape.cols) + " blocks");
  }
  block_rows_ = rows / shape.rows;
  block_cols_ = cols / shape.cols;
  keep_.assign(block_rows_ * block_cols_, 1);
}

std::size_t BlockMask::masked_count() const {
  return static_cast<std::size_t>(std::count(keep_.begin(), keep_.end(), std::uint8_t{0}));
}

double BlockMask::achieved_sparsity() const {
  if (keep_.empty()) return 0.0;
  return static_cast<double>(masked_count()) / static_cast<double>(keep_.size());
}

bool BlockMask::masked_subset_of(const BlockMask& other) const {
  if (other.keep_.size() != keep_.size()) return false;
  for (std::size_t i = 0; i < keep_.size(); ++i) {
    if (keep_[i] == 0 && other.keep_[i] != 0) return false;
  }
  return true;
}

std::vector<std::uint8_t> BlockMask::to_bits() const {
  std::vector<std::uint8_t> bits((keep_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < keep_.size(); ++i) {
    if (keep_[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return bits;
}

BlockMask BlockMask::from_bits(std::size_t rows, std::size_t cols, BlockShape shape,
                               std::span<const std::uint8_t> bits) {
  BlockMask m(rows, cols, shape);
  if (bits.size() != (m.keep_.size() + 7) / 8) {
    throw DimensionError("mask bitset of " + std::to_string(bits.size()) + " bytes for " +
                         std::to_string(m.keep_.size()) + " blocks");
  }
  for (std::size_t i = 0; i < m.keep_.size(); ++i) m.keep_[i] = (bits[i / 8] >> (i % 8)) & 1u;
  return m;
}

std::size_t masked_block_target(double fraction, std::size_t n_blocks) {
  const double exact = fraction * static_cast<double>(n_blocks);
  const auto target = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::min(target, n_blocks);
}

BlockMask grow_mask(std::span<const double> block_scores, const BlockMask& current,
                    double target_fraction) {
  if (!(target_fraction >= 0.0 && target_fraction <= 1.0)) {
    throw ConfigError("prune target must lie in [0, 1]");
  }
  if (block_scores.size() != current.block_count()) {
    throw DimensionError("grow_mask: score count does not match block count");
  }
  const std::size_t wanted = masked_block_target(target_fraction, current.block_count());
  const std::size_t already = current.masked_count();
  if (wanted < already) {
    throw ContractError("prune_to: target " + std::to_string(target_fraction) +
                        " is below the achieved sparsity " +
                        std::to_string(current.achieved_sparsity()) + "; masks only grow");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t b = 0; b < current.block_count(); ++b) {
    if (current.kept_index(b)) candidates.push_back(b);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return block_scores[a] < block_scores[b];
  });
  BlockMask next = current;
  for (std::size_t i = 0; i < wanted - already; ++i) next.set_index(candidates[i], false);
  return next;
}

double count_ops(std::size_t input_dim, std::size_t hidden, double sparsity) {
  const double i = static_cast<double>(input_dim);
  const double h = static_cast<double>(hidden);
  return 4.0 * (1.0 - sparsity) * (i * h + h * h);
}

}  // namespace feather
