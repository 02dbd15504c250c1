#include "feather/toy_data.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include <json.hpp>

#include "blob_io.hpp"
#include "feather/error.hpp"

namespace feather {
namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kPrototypeStream = 0x70726f746fULL;
constexpr std::size_t kMaxDatasetValues = std::size_t{1} << 30;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

Utterance make_utterance(const ToyTaskSpec& spec, const Tensor& prototypes, std::size_t index) {
  auto rng = stream(spec.seed, index);
  std::uniform_int_distribution<std::size_t> length_dist(spec.min_length, spec.max_length);
  std::uniform_int_distribution<int> symbol_dist(0, static_cast<int>(spec.vocab_size) - 1);
  std::uniform_int_distribution<long> jitter_dist(-static_cast<long>(spec.jitter),
                                                  static_cast<long>(spec.jitter));
  std::normal_distribution<double> noise(0.0, 1.0);

  Utterance u;
  const std::size_t length = length_dist(rng);
  u.phonemes.resize(length);
  for (int& p : u.phonemes) p = symbol_dist(rng);
  std::size_t total = 0;
  for (std::size_t j = 0; j < length; ++j) {
    long d = static_cast<long>(spec.frames_per_symbol);
    if (spec.jitter > 0) d += jitter_dist(rng);
    u.durations.push_back(static_cast<std::size_t>(std::max(1L, d)));
    total += u.durations.back();
  }
  u.frames = Tensor(total, spec.mel_dim, Precision::kF32);
  std::size_t row = 0;
  for (std::size_t j = 0; j < length; ++j) {
    const auto proto = prototypes.row_span(static_cast<std::size_t>(u.phonemes[j]));
    for (std::size_t f = 0; f < u.durations[j]; ++f, ++row) {
      for (std::size_t m = 0; m < spec.mel_dim; ++m) {
        const double n = spec.noise_std > 0.0 ? spec.noise_std * noise(rng) : 0.0;
        u.frames(row, m) = round_to(proto[m] + n, Precision::kF32);
      }
    }
  }
  return u;
}

}  // namespace

void ToyTaskSpec::validate() const {
  if (vocab_size < 1 || mel_dim < 1 || frames_per_symbol < 1) {
    throw ConfigError("toy task: vocab_size, mel_dim and frames_per_symbol must be >= 1");
  }
  if (min_length < 1 || min_length > max_length) {
    throw ConfigError("toy task: need 1 <= min_length <= max_length");
  }
  if (jitter >= frames_per_symbol && jitter > 0) {
    throw ConfigError("toy task: jitter must be smaller than frames_per_symbol");
  }
  if (!(noise_std >= 0.0)) throw ConfigError("toy task: noise_std must be >= 0");
  // Largest possible frame count times mel bins must stay addressable.
  const std::size_t per_utt = (frames_per_symbol + jitter) * max_length;
  if (per_utt > kMaxDatasetValues / mel_dim ||
      (count > 0 && per_utt * mel_dim > kMaxDatasetValues / count)) {
    throw ConfigError("toy task: k * J_max * count * mel_dim exceeds the dataset size limit");
  }
}

unsigned threads_from_env() {
  if (const char* env = std::getenv("FEATHER_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("FEATHER_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

ToyDataset generate_toy_dataset(const ToyTaskSpec& spec, unsigned threads) {
  spec.validate();
  ToyDataset data;
  data.spec = spec;
  data.prototypes = Tensor(spec.vocab_size, spec.mel_dim, Precision::kF32);
  auto rng = stream(spec.seed, kPrototypeStream);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : data.prototypes.values()) v = round_to(u(rng), Precision::kF32);

  data.utterances.resize(spec.count);
  if (threads == 0) threads = threads_from_env();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(spec.count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < spec.count; ++i) {
      data.utterances[i] = make_utterance(spec, data.prototypes, i);
    }
    return data;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < spec.count; i += threads) {
        data.utterances[i] = make_utterance(spec, data.prototypes, i);
      }
    });
  }
  for (auto& th : pool) th.join();
  return data;
}

std::pair<ToyDataset, ToyDataset> split_dataset(ToyDataset data, std::size_t heldout) {
  if (heldout > data.utterances.size()) throw ConfigError("split: held-out count exceeds dataset");
  ToyDataset tail;
  tail.spec = data.spec;
  tail.prototypes = data.prototypes;
  const auto cut = data.utterances.end() - static_cast<std::ptrdiff_t>(heldout);
  tail.utterances.assign(std::make_move_iterator(cut), std::make_move_iterator(data.utterances.end()));
  data.utterances.erase(cut, data.utterances.end());
  return {std::move(data), std::move(tail)};
}

void save_dataset(const ToyDataset& data, const std::filesystem::path& dir) {
  detail::ensure_directory(dir);
  std::vector<std::uint8_t> blob;
  json spec;
  spec["vocab_size"] = data.spec.vocab_size;
  spec["min_length"] = data.spec.min_length;
  spec["max_length"] = data.spec.max_length;
  spec["frames_per_symbol"] = data.spec.frames_per_symbol;
  spec["jitter"] = data.spec.jitter;
  spec["mel_dim"] = data.spec.mel_dim;
  spec["noise_std"] = data.spec.noise_std;
  spec["seed"] = data.spec.seed;
  spec["count"] = data.spec.count;
  detail::append_values(blob, data.prototypes.values(), Precision::kF32);
  json utts = json::array();
  for (const Utterance& u : data.utterances) {
    json e;
    e["phonemes"] = u.phonemes;
    e["durations"] = u.durations;
    e["frames"] = u.frames.rows();
    e["offset"] = blob.size() / sizeof(float);
    detail::append_values(blob, u.frames.values(), Precision::kF32);
    utts.push_back(std::move(e));
  }
  json manifest;
  manifest["format"] = "feather-dataset";
  manifest["format_version"] = 1;
  manifest["precision"] = "f32";
  manifest["byte_order"] = "little";
  manifest["spec"] = std::move(spec);
  manifest["utterances"] = std::move(utts);
  detail::write_text(dir / "manifest.json", manifest.dump(1) + "\n");
  detail::write_file(dir / "frames.bin", blob);
}

ToyDataset load_dataset(const std::filesystem::path& dir) {
  try {
    const json manifest = json::parse(detail::read_text(dir / "manifest.json"));
    if (manifest.at("format").get<std::string>() != "feather-dataset") {
      throw IoError(dir.string() + " is not a dataset");
    }
    const json& s = manifest.at("spec");
    ToyDataset data;
    data.spec.vocab_size = s.at("vocab_size").get<std::size_t>();
    data.spec.min_length = s.at("min_length").get<std::size_t>();
    data.spec.max_length = s.at("max_length").get<std::size_t>();
    data.spec.frames_per_symbol = s.at("frames_per_symbol").get<std::size_t>();
    data.spec.jitter = s.at("jitter").get<std::size_t>();
    data.spec.mel_dim = s.at("mel_dim").get<std::size_t>();
    data.spec.noise_std = s.at("noise_std").get<double>();
    data.spec.seed = s.at("seed").get<std::uint64_t>();
    data.spec.count = s.at("count").get<std::size_t>();
    const auto blob = detail::read_file(dir / "frames.bin");
    const std::size_t mel = data.spec.mel_dim;
    data.prototypes = Tensor(data.spec.vocab_size, mel,
                             detail::read_values(blob, 0, data.spec.vocab_size * mel, Precision::kF32),
                             Precision::kF32);
    for (const json& e : manifest.at("utterances")) {
      Utterance u;
      u.phonemes = e.at("phonemes").get<std::vector<int>>();
      u.durations = e.at("durations").get<std::vector<std::size_t>>();
      const auto frames = e.at("frames").get<std::size_t>();
      const auto offset = e.at("offset").get<std::size_t>();
      u.frames = Tensor(frames, mel,
                        detail::read_values(blob, offset * sizeof(float), frames * mel, Precision::kF32),
                        Precision::kF32);
      data.utterances.push_back(std::move(u));
    }
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
}

std::string_view to_string(StressKind k) {
  switch (k) {
    case StressKind::kVeryShort: return "very_short";
    case StressKind::kVeryLong: return "very_long";
    case StressKind::kRepeatedSymbol: return "repeated_symbol";
  }
  return "unknown";
}

StressKind parse_stress_kind(std::string_view text) {
  if (text == "very_short") return StressKind::kVeryShort;
  if (text == "very_long") return StressKind::kVeryLong;
  if (text == "repeated_symbol") return StressKind::kRepeatedSymbol;
  throw ConfigError("unknown stress suite '" + std::string(text) + "'");
}

std::vector<std::vector<int>> stress_suite(StressKind kind, const StressOptions& options) {
  if (options.vocab_size < 1 || options.training_max_length < 1) {
    throw ConfigError("stress suite: vocab_size and training_max_length must be >= 1");
  }
  auto rng = stream(options.seed, static_cast<std::uint64_t>(kind) + 1);
  std::uniform_int_distribution<int> symbol(0, static_cast<int>(options.vocab_size) - 1);
  std::vector<std::vector<int>> suite;
  for (std::size_t n = 0; n < options.count; ++n) {
    std::size_t length = 1;
    switch (kind) {
      case StressKind::kVeryShort:
        length = 1 + n % 3;
        break;
      case StressKind::kVeryLong:
        length = 10 * options.training_max_length;
        break;
      case StressKind::kRepeatedSymbol: {
        const std::size_t lo = std::min<std::size_t>(5, options.training_max_length);
        std::uniform_int_distribution<std::size_t> len(lo, options.training_max_length);
        length = len(rng);
        break;
      }
    }
    std::vector<int> ids(length);
    if (kind == StressKind::kRepeatedSymbol) {
      std::fill(ids.begin(), ids.end(), symbol(rng));
    } else {
      for (int& id : ids) id = symbol(rng);
    }
    suite.push_back(std::move(ids));
  }
  return suite;
}

}  // namespace feather
