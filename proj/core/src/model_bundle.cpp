#include "feather/model_bundle.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "blob_io.hpp"
#include "feather/error.hpp"

namespace feather {
namespace {

using json = nlohmann::ordered_json;

enum class InitKind { kEmbedding, kWeight, kLstmBias, kZero };

struct ParamSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  InitKind init;
};

void add_lstm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t input,
              std::size_t hidden) {
  out.push_back({prefix + ".w_ih", 4 * hidden, input, InitKind::kWeight});
  out.push_back({prefix + ".w_hh", 4 * hidden, hidden, InitKind::kWeight});
  out.push_back({prefix + ".bias", 1, 4 * hidden, InitKind::kLstmBias});
}

std::vector<ParamSpec> layout(const ModelConfig& c) {
  std::vector<ParamSpec> out;
  const std::size_t half = c.encoder_dim / 2;
  out.push_back({"embedding", c.vocab_size, c.embed_dim, InitKind::kEmbedding});
  add_lstm(out, "encoder.fwd", c.embed_dim, half);
  add_lstm(out, "encoder.bwd", c.embed_dim, half);
  add_lstm(out, "attention_rnn", c.attention_rnn_input_dim(), c.attention_rnn_dim);
  out.push_back({"attention.proj.weight", c.attention.projection_outputs(), c.attention_rnn_dim,
                 InitKind::kWeight});
  out.push_back({"attention.proj.bias", 1, c.attention.projection_outputs(), InitKind::kZero});
  add_lstm(out, "decoder_rnn", c.decoder_rnn_input_dim(), c.decoder_rnn_dim);
  out.push_back({"output.weight", c.step_output_dim(), c.decoder_rnn_dim, InitKind::kWeight});
  out.push_back({"output.bias", 1, c.step_output_dim(), InitKind::kZero});
  add_lstm(out, "postnet.rnn", c.mel_dim, c.postnet_dim);
  out.push_back({"postnet.out.weight", c.mel_dim, c.postnet_dim, InitKind::kWeight});
  out.push_back({"postnet.out.bias", 1, c.mel_dim, InitKind::kZero});
  return out;
}

json config_to_json(const ModelConfig& c) {
  json a;
  a["mechanism"] = std::string(to_string(c.attention.mechanism));
  a["components"] = c.attention.components;
  a["initial_mu"] = c.attention.initial_mu;
  a["delta_bias"] = c.attention.delta_bias;
  a["sigma_bias"] = c.attention.sigma_bias;
  json j;
  j["vocab_size"] = c.vocab_size;
  j["embed_dim"] = c.embed_dim;
  j["encoder_dim"] = c.encoder_dim;
  j["attention_rnn_dim"] = c.attention_rnn_dim;
  j["decoder_rnn_dim"] = c.decoder_rnn_dim;
  j["postnet_dim"] = c.postnet_dim;
  j["mel_dim"] = c.mel_dim;
  j["reduction_factor"] = c.reduction_factor;
  j["delay_frames"] = c.delay_frames;
  j["stop_lambda"] = c.stop_lambda;
  j["max_decode_steps"] = c.max_decode_steps;
  j["attention"] = a;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.encoder_dim = j.at("encoder_dim").get<std::size_t>();
  c.attention_rnn_dim = j.at("attention_rnn_dim").get<std::size_t>();
  c.decoder_rnn_dim = j.at("decoder_rnn_dim").get<std::size_t>();
  c.postnet_dim = j.at("postnet_dim").get<std::size_t>();
  c.mel_dim = j.at("mel_dim").get<std::size_t>();
  c.reduction_factor = j.at("reduction_factor").get<std::size_t>();
  c.delay_frames = j.at("delay_frames").get<std::size_t>();
  c.stop_lambda = j.at("stop_lambda").get<double>();
  c.max_decode_steps = j.at("max_decode_steps").get<std::size_t>();
  const json& a = j.at("attention");
  c.attention.mechanism = parse_mechanism(a.at("mechanism").get<std::string>());
  c.attention.components = a.at("components").get<int>();
  c.attention.initial_mu = a.at("initial_mu").get<double>();
  c.attention.delta_bias = a.at("delta_bias").get<double>();
  c.attention.sigma_bias = a.at("sigma_bias").get<double>();
  c.validate();
  return c;
}

}  // namespace

void ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(value)});
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::index_of(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

ModelBundle create_model(const ModelConfig& config, std::uint64_t seed, Precision precision) {
  config.validate();
  ModelBundle m;
  m.config = config;
  m.precision = precision;
  std::mt19937_64 rng(seed);
  for (const ParamSpec& spec : layout(config)) {
    Tensor t(spec.rows, spec.cols);
    switch (spec.init) {
      case InitKind::kEmbedding: {
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (double& v : t.values()) v = u(rng);
        break;
      }
      case InitKind::kWeight: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& v : t.values()) v = u(rng);
        break;
      }
      case InitKind::kLstmBias: {
        // Forget gate opens at initialisation.
        const std::size_t hidden = spec.cols / 4;
        for (std::size_t k = hidden; k < 2 * hidden; ++k) t[k] = 1.0;
        break;
      }
      case InitKind::kZero:
        break;
    }
    m.params.add(spec.name, std::move(t.round(precision)));
  }
  return m;
}

std::vector<std::string> prunable_parameters(const PruneTargets& targets) {
  std::vector<std::string> names;
  if (targets.attention_rnn) {
    names.emplace_back("attention_rnn.w_ih");
    names.emplace_back("attention_rnn.w_hh");
  }
  if (targets.decoder_rnn) {
    names.emplace_back("decoder_rnn.w_ih");
    names.emplace_back("decoder_rnn.w_hh");
  }
  return names;
}

ModelBundle prune_bundle(const ModelBundle& model, double sparsity, BlockShape block,
                         const PruneTargets& targets) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw ConfigError("prune sparsity must lie in [0, 1)");
  }
  ModelBundle out = model;
  for (const std::string& name : prunable_parameters(targets)) {
    Tensor& w = out.params.at(name);
    const auto it = out.masks.find(name);
    const BlockMask current = it == out.masks.end() ? BlockMask(w.rows(), w.cols(), block) : it->second;
    const auto pruned = prune_to<double>(w.values(), w.rows(), w.cols(), current, sparsity, block);
    pruned.mask().apply(w.values());
    out.masks[name] = pruned.mask();
  }
  out.prune_target = sparsity;
  return out;
}

void save_bundle(const ModelBundle& model, const std::filesystem::path& dir) {
  detail::ensure_directory(dir);
  std::vector<std::uint8_t> weights;
  std::vector<std::uint8_t> masks;
  json params = json::array();
  const std::size_t width = detail::value_bytes(model.precision);
  for (const Parameter& p : model.params) {
    json entry;
    entry["name"] = p.name;
    entry["shape"] = {p.value.rows(), p.value.cols()};
    entry["offset"] = weights.size() / width;
    const auto mask_it = model.masks.find(p.name);
    if (mask_it == model.masks.end()) {
      entry["encoding"] = "dense";
      entry["count"] = p.value.size();
      detail::append_values(weights, p.value.values(), model.precision);
    } else {
      const BlockMask& mask = mask_it->second;
      const auto sparse = BlockSparseMatrix<double>::from_dense(p.value.values(), mask);
      const auto bits = mask.to_bits();
      entry["encoding"] = "block_sparse";
      entry["count"] = sparse.block_values().size();
      entry["block"] = {mask.shape().rows, mask.shape().cols};
      entry["mask_offset"] = masks.size();
      entry["mask_bytes"] = bits.size();
      detail::append_values(weights, sparse.block_values(), model.precision);
      masks.insert(masks.end(), bits.begin(), bits.end());
    }
    params.push_back(std::move(entry));
  }
  json manifest;
  manifest["format"] = "feather-bundle";
  manifest["format_version"] = kBundleFormatVersion;
  manifest["precision"] = std::string(to_string(model.precision));
  manifest["byte_order"] = "little";
  manifest["prune_target"] = model.prune_target;
  manifest["config"] = config_to_json(model.config);
  manifest["parameters"] = std::move(params);
  detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  detail::write_file(dir / "weights.bin", weights);
  detail::write_file(dir / "masks.bin", masks);
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(detail::read_text(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  try {
    if (manifest.at("format").get<std::string>() != "feather-bundle") {
      throw IoError(dir.string() + " is not a model bundle");
    }
    if (manifest.at("format_version").get<int>() != kBundleFormatVersion) {
      throw IoError("unsupported bundle format version in " + dir.string());
    }
    ModelBundle m;
    m.precision = parse_precision(manifest.at("precision").get<std::string>());
    m.prune_target = manifest.at("prune_target").get<double>();
    m.config = config_from_json(manifest.at("config"));
    const auto weights = detail::read_file(dir / "weights.bin");
    const auto masks = detail::read_file(dir / "masks.bin");
    const std::size_t width = detail::value_bytes(m.precision);
    std::size_t expected_end = 0;
    for (const json& entry : manifest.at("parameters")) {
      const auto name = entry.at("name").get<std::string>();
      const auto rows = entry.at("shape").at(0).get<std::size_t>();
      const auto cols = entry.at("shape").at(1).get<std::size_t>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = entry.at("count").get<std::size_t>();
      auto values = detail::read_values(weights, offset * width, count, m.precision);
      expected_end = std::max(expected_end, (offset + count) * width);
      const auto encoding = entry.at("encoding").get<std::string>();
      if (encoding == "dense") {
        m.params.add(name, Tensor(rows, cols, std::move(values), m.precision));
      } else if (encoding == "block_sparse") {
        const BlockShape block{entry.at("block").at(0).get<std::size_t>(),
                               entry.at("block").at(1).get<std::size_t>()};
        const auto mask_offset = entry.at("mask_offset").get<std::size_t>();
        const auto mask_bytes = entry.at("mask_bytes").get<std::size_t>();
        if (mask_offset + mask_bytes > masks.size()) throw IoError("mask blob truncated");
        const BlockMask mask = BlockMask::from_bits(
            rows, cols, block,
            std::span<const std::uint8_t>(masks).subspan(mask_offset, mask_bytes));
        const auto sparse = BlockSparseMatrix<double>::from_blocks(mask, values);
        m.params.add(name, Tensor(rows, cols, sparse.to_dense(), m.precision));
        m.masks.emplace(name, mask);
      } else {
        throw IoError("unknown parameter encoding '" + encoding + "'");
      }
    }
    if (expected_end != weights.size()) throw IoError("weights blob size does not match manifest");
    // Reject bundles whose parameter list does not match the configuration.
    const ModelBundle reference = create_model(m.config, 0, m.precision);
    if (reference.params.size() != m.params.size()) {
      throw IoError("bundle parameter count does not match its configuration");
    }
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      const auto& want = reference.params[i];
      const auto& got = m.params[i];
      if (want.name != got.name || !want.value.same_shape(got.value)) {
        throw IoError("bundle parameter '" + got.name + "' does not match its configuration");
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace feather
