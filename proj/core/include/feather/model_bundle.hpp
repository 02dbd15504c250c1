#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "feather/block_sparse.hpp"
#include "feather/model_config.hpp"
#include "feather/tensor.hpp"

namespace feather {

struct Parameter {
  std::string name;
  Tensor value;
};

// Named parameters in a fixed order; the order is the serialization order.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  std::size_t size() const { return params_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const Tensor& at(std::string_view name) const { return params_[index_of(name)].value; }
  Tensor& at(std::string_view name) { return params_[index_of(name)].value; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Which decoder-side recurrent layers take part in pruning.
struct PruneTargets {
  bool attention_rnn = true;
  bool decoder_rnn = true;
};

// Weights, configuration and sparsity masks of one model.
struct ModelBundle {
  ModelConfig config;
  Precision precision = Precision::kF32;
  ParameterSet params;
  // Block masks of pruned parameters, keyed by parameter name. Masked
  // entries of the dense values are exactly zero.
  std::map<std::string, BlockMask> masks;
  // Target sparsity the masks were pruned towards (0 for a dense model).
  double prune_target = 0.0;

  bool is_sparse() const { return !masks.empty(); }
};

inline constexpr int kBundleFormatVersion = 1;

// Random initialisation; deterministic for (config, seed, precision).
ModelBundle create_model(const ModelConfig& config, std::uint64_t seed,
                         Precision precision = Precision::kF32);

// LSTM kernel names eligible for pruning (decoder side only).
std::vector<std::string> prunable_parameters(const PruneTargets& targets);

// Offline magnitude pruning of the prunable kernels to `sparsity`.
ModelBundle prune_bundle(const ModelBundle& model, double sparsity, BlockShape block,
                         const PruneTargets& targets = {});

// Writes manifest.json, weights.bin and masks.bin into `dir`.
void save_bundle(const ModelBundle& model, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace feather
