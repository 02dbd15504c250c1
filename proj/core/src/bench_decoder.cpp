#include "feather/bench_decoder.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "feather/error.hpp"
#include "feather/inference.hpp"

namespace feather {
namespace {

void require_same_architecture(const ModelBundle& a, const ModelBundle& b) {
  const ModelConfig& x = a.config;
  const ModelConfig& y = b.config;
  const bool same = x.vocab_size == y.vocab_size && x.embed_dim == y.embed_dim &&
                    x.encoder_dim == y.encoder_dim && x.attention_rnn_dim == y.attention_rnn_dim &&
                    x.decoder_rnn_dim == y.decoder_rnn_dim && x.mel_dim == y.mel_dim &&
                    x.reduction_factor == y.reduction_factor &&
                    x.attention.mechanism == y.attention.mechanism &&
                    x.attention.components == y.attention.components && a.precision == b.precision;
  if (!same) throw ConfigError("bench: dense and sparse bundles do not share an architecture");
  if (a.params.size() != b.params.size()) {
    throw ConfigError("bench: dense and sparse bundles have different parameter sets");
  }
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || !a.params[i].value.same_shape(b.params[i].value)) {
      throw ConfigError("bench: parameter '" + a.params[i].name + "' differs between bundles");
    }
  }
}

template <typename T>
double median_seconds(const InferenceModel<T>& model, const EncoderOutput<T>& encoded,
                      std::size_t steps, const BenchOptions& o) {
  volatile T sink = T(0);
  for (std::size_t w = 0; w < o.warmup; ++w) sink = sink + model.run_decoder(encoded, steps);
  std::vector<double> times;
  for (std::size_t r = 0; r < o.repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    sink = sink + model.run_decoder(encoded, steps);
    const auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

template <typename T>
BenchReport run(const ModelBundle& dense, const ModelBundle& sparse, const BenchOptions& o) {
  const InferenceModel<T> dense_model(dense);
  const InferenceModel<T> sparse_model(sparse);
  const ModelConfig& c = dense.config;

  std::mt19937_64 rng(o.seed);
  std::uniform_int_distribution<int> symbol(0, static_cast<int>(c.vocab_size) - 1);
  std::vector<int> input(o.input_length);
  for (int& id : input) id = symbol(rng);
  // Both models decode over the same encoder states.
  const EncoderOutput<T> encoded = dense_model.encode(input);

  BenchReport r;
  r.attention_rnn_input = c.attention_rnn_input_dim();
  r.attention_rnn_dim = c.attention_rnn_dim;
  r.decoder_rnn_input = c.decoder_rnn_input_dim();
  r.decoder_rnn_dim = c.decoder_rnn_dim;
  r.mel_dim = c.mel_dim;
  r.reduction_factor = c.reduction_factor;
  r.mechanism = std::string(to_string(c.attention.mechanism));
  r.target_sparsity = sparse.prune_target;
  r.frames = o.frames;
  r.decode_steps = c.steps_for_frames(o.frames);
  r.repeats = o.repeats;

  std::size_t masked = 0, total = 0;
  for (const auto& [name, mask] : sparse.masks) {
    masked += mask.masked_count() * mask.shape().size();
    total += mask.rows() * mask.cols();
    r.block_rows = mask.shape().rows;
    r.block_cols = mask.shape().cols;
    r.granule += static_cast<double>(mask.shape().size());
  }
  r.achieved_sparsity = total > 0 ? static_cast<double>(masked) / static_cast<double>(total) : 0.0;

  MultiplyCounter dense_count, sparse_count;
  dense_model.run_decoder(encoded, 1, &dense_count);
  sparse_model.run_decoder(encoded, 1, &sparse_count);
  r.dense_multiplies = dense_count.multiplies;
  r.sparse_multiplies = sparse_count.multiplies;
  auto predicted = [&](double s_att, double s_dec) {
    return count_ops(c.attention_rnn_input_dim(), c.attention_rnn_dim, s_att) +
           count_ops(c.decoder_rnn_input_dim(), c.decoder_rnn_dim, s_dec);
  };
  r.predicted_dense = predicted(0.0, 0.0);
  const double s = sparse.prune_target;
  r.predicted_sparse = predicted(sparse.masks.contains("attention_rnn.w_hh") ? s : 0.0,
                                 sparse.masks.contains("decoder_rnn.w_hh") ? s : 0.0);

  r.dense_seconds = median_seconds(dense_model, encoded, r.decode_steps, o);
  r.sparse_seconds = median_seconds(sparse_model, encoded, r.decode_steps, o);
  const double frames = static_cast<double>(r.decode_steps * c.reduction_factor);
  r.dense_frames_per_second = frames / r.dense_seconds;
  r.sparse_frames_per_second = frames / r.sparse_seconds;
  r.speedup = r.dense_seconds / r.sparse_seconds;
  return r;
}

}  // namespace

BenchReport bench_decoder(const ModelBundle& dense, const ModelBundle& sparse, const BenchOptions& o) {
  require_same_architecture(dense, sparse);
  if (o.frames < 1 || o.repeats < 1 || o.input_length < 1) {
    throw ConfigError("bench: frames, repeats and input_length must be >= 1");
  }
  return dense.precision == Precision::kF32 ? run<float>(dense, sparse, o)
                                            : run<double>(dense, sparse, o);
}

std::string format_report(const BenchReport& r) {
  std::ostringstream out;
  out << std::fixed;
  out << "decoder benchmark (" << r.threads << " thread)\n"
      << "  attention rnn     " << r.attention_rnn_input << " -> " << r.attention_rnn_dim << "\n"
      << "  decoder rnn       " << r.decoder_rnn_input << " -> " << r.decoder_rnn_dim << "\n"
      << "  mechanism         " << r.mechanism << ", r = " << r.reduction_factor
      << ", mel = " << r.mel_dim << "\n"
      << std::setprecision(4) << "  sparsity          target " << r.target_sparsity << ", achieved "
      << r.achieved_sparsity << ", blocks " << r.block_rows << "x" << r.block_cols << "\n"
      << "  frames per run    " << r.frames << " (" << r.decode_steps << " steps), median of "
      << r.repeats << "\n"
      << std::setprecision(6) << "  dense             " << r.dense_seconds << " s, "
      << std::setprecision(1) << r.dense_frames_per_second << " frames/s\n"
      << std::setprecision(6) << "  sparse            " << r.sparse_seconds << " s, "
      << std::setprecision(1) << r.sparse_frames_per_second << " frames/s\n"
      << std::setprecision(2) << "  speedup           " << r.speedup << "x\n"
      << std::setprecision(1) << "  multiplies/step   dense " << r.dense_multiplies << " (predicted "
      << r.predicted_dense << "), sparse " << r.sparse_multiplies << " (predicted "
      << r.predicted_sparse << ")\n";
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, const BenchReport& r) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "attention_rnn_input,attention_rnn_dim,decoder_rnn_input,decoder_rnn_dim,mel_dim,"
         "reduction_factor,mechanism,target_sparsity,achieved_sparsity,block_rows,block_cols,"
         "threads,frames,decode_steps,repeats,dense_seconds,sparse_seconds,"
         "dense_frames_per_second,sparse_frames_per_second,speedup,dense_multiplies,"
         "sparse_multiplies,predicted_dense,predicted_sparse,granule\n";
  out << r.attention_rnn_input << ',' << r.attention_rnn_dim << ',' << r.decoder_rnn_input << ','
      << r.decoder_rnn_dim << ',' << r.mel_dim << ',' << r.reduction_factor << ',' << r.mechanism
      << ',' << r.target_sparsity << ',' << r.achieved_sparsity << ',' << r.block_rows << ','
      << r.block_cols << ',' << r.threads << ',' << r.frames << ',' << r.decode_steps << ','
      << r.repeats << ',' << r.dense_seconds << ',' << r.sparse_seconds << ','
      << r.dense_frames_per_second << ',' << r.sparse_frames_per_second << ',' << r.speedup << ','
      << r.dense_multiplies << ',' << r.sparse_multiplies << ',' << r.predicted_dense << ','
      << r.predicted_sparse << ',' << r.granule << '\n';
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file << out.str();
}

}  // namespace feather
