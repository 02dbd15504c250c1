#include "feather/inference.hpp"

#include <algorithm>
#include <string>

#include "feather/error.hpp"

namespace feather {
namespace {

template <std::floating_point T>
std::vector<T> convert(const Tensor& t) {
  std::vector<T> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<T>(t[i]);
  return out;
}

template <std::floating_point T>
LinearKernel<T> make_kernel(const ModelBundle& m, const std::string& name) {
  const Tensor& w = m.params.at(name);
  const std::vector<T> values = convert<T>(w);
  const auto it = m.masks.find(name);
  if (it != m.masks.end()) {
    return LinearKernel<T>(BlockSparseMatrix<T>::from_dense(values, it->second));
  }
  return LinearKernel<T>(DenseMatrix<T>(w.rows(), w.cols(), values));
}

template <std::floating_point T>
LstmWeights<T> make_lstm(const ModelBundle& m, const std::string& prefix) {
  return {make_kernel<T>(m, prefix + ".w_ih"), make_kernel<T>(m, prefix + ".w_hh"),
          convert<T>(m.params.at(prefix + ".bias"))};
}

template <std::floating_point T>
DenseMatrix<T> make_dense(const ModelBundle& m, const std::string& name) {
  const Tensor& w = m.params.at(name);
  return DenseMatrix<T>(w.rows(), w.cols(), convert<T>(w));
}

template <std::floating_point T>
LstmState<T> zero_state(std::size_t hidden) {
  return {std::vector<T>(hidden, T(0)), std::vector<T>(hidden, T(0))};
}

}  // namespace

template <std::floating_point T>
InferenceModel<T>::InferenceModel(const ModelBundle& model) : config_(model.config) {
  config_.validate();
  embedding_ = convert<T>(model.params.at("embedding"));
  encoder_fwd_ = make_lstm<T>(model, "encoder.fwd");
  encoder_bwd_ = make_lstm<T>(model, "encoder.bwd");
  attention_rnn_ = make_lstm<T>(model, "attention_rnn");
  decoder_rnn_ = make_lstm<T>(model, "decoder_rnn");
  postnet_rnn_ = make_lstm<T>(model, "postnet.rnn");
  const Tensor& proj = model.params.at("attention.proj.weight");
  projection_.outputs = proj.rows();
  projection_.query_dim = proj.cols();
  projection_.weight = convert<T>(proj);
  projection_.bias = convert<T>(model.params.at("attention.proj.bias"));
  output_ = make_dense<T>(model, "output.weight");
  output_bias_ = convert<T>(model.params.at("output.bias"));
  postnet_out_ = make_dense<T>(model, "postnet.out.weight");
  postnet_out_bias_ = convert<T>(model.params.at("postnet.out.bias"));
}

template <std::floating_point T>
EncoderOutput<T> InferenceModel<T>::encode(std::span<const int> phonemes) const {
  if (phonemes.empty()) throw InputError("encode: empty phoneme sequence");
  const std::size_t length = phonemes.size();
  const std::size_t embed = config_.embed_dim;
  const std::size_t half = config_.encoder_dim / 2;
  for (int id : phonemes) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw InputError("encode: phoneme id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(config_.vocab_size));
    }
  }
  EncoderOutput<T> out{length, config_.encoder_dim,
                       std::vector<T>(length * config_.encoder_dim, T(0))};
  std::vector<T> gates(4 * half);
  auto run = [&](const LstmWeights<T>& w, bool reverse, std::size_t column) {
    LstmState<T> state = zero_state<T>(half), next = zero_state<T>(half);
    for (std::size_t n = 0; n < length; ++n) {
      const std::size_t t = reverse ? length - 1 - n : n;
      const auto x = std::span<const T>(embedding_).subspan(
          static_cast<std::size_t>(phonemes[t]) * embed, embed);
      lstm_step_into<T>(w, x, state.h, state.c, next.h, next.c, gates);
      std::swap(state, next);
      std::copy(state.h.begin(), state.h.end(),
                out.values.begin() + static_cast<std::ptrdiff_t>(t * out.dim + column));
    }
  };
  run(encoder_fwd_, false, 0);
  run(encoder_bwd_, true, half);
  return out;
}

template <std::floating_point T>
DecoderState<T> InferenceModel<T>::initial_state() const {
  DecoderState<T> s;
  s.attention_rnn = zero_state<T>(config_.attention_rnn_dim);
  s.decoder_rnn = zero_state<T>(config_.decoder_rnn_dim);
  s.context.assign(config_.encoder_dim, T(0));
  if (config_.attention.mechanism == Mechanism::kGaussian) {
    s.gaussian = initial_gaussian_state<T>(config_.attention);
  } else {
    s.gmm = initial_gmm_state<T>(config_.attention);
  }
  return s;
}

template <std::floating_point T>
typename InferenceModel<T>::Workspace InferenceModel<T>::make_workspace(std::size_t length) const {
  Workspace ws;
  ws.att_in.resize(config_.attention_rnn_input_dim());
  ws.dec_in.resize(config_.decoder_rnn_input_dim());
  ws.gates_att.resize(4 * config_.attention_rnn_dim);
  ws.gates_dec.resize(4 * config_.decoder_rnn_dim);
  ws.hat.resize(projection_.outputs);
  ws.weights.resize(length);
  ws.frames.resize(config_.step_output_dim());
  ws.att_next = zero_state<T>(config_.attention_rnn_dim);
  ws.dec_next = zero_state<T>(config_.decoder_rnn_dim);
  return ws;
}

template <std::floating_point T>
void InferenceModel<T>::advance(DecoderState<T>& s, std::span<const T> y_prev,
                                const EncoderOutput<T>& encoded, Workspace& ws,
                                MultiplyCounter* counter) const {
  const std::size_t d = config_.encoder_dim;
  if (y_prev.size() != config_.step_output_dim()) {
    throw ContractError("decode_step: previous output has " + std::to_string(y_prev.size()) +
                        " values, expected " + std::to_string(config_.step_output_dim()));
  }
  if (encoded.dim != d || encoded.values.size() != encoded.length * d || encoded.length == 0) {
    throw ContractError("decode_step: encoder outputs do not match the model");
  }
  if (ws.weights.size() != encoded.length) ws.weights.resize(encoded.length);

  std::copy(s.context.begin(), s.context.end(), ws.att_in.begin());
  std::copy(y_prev.begin(), y_prev.end(), ws.att_in.begin() + static_cast<std::ptrdiff_t>(d));
  lstm_step_into<T>(attention_rnn_, ws.att_in, s.attention_rnn.h, s.attention_rnn.c,
                    ws.att_next.h, ws.att_next.c, ws.gates_att, counter);
  std::swap(s.attention_rnn, ws.att_next);

  projection_.apply(s.attention_rnn.h, ws.hat);
  if (config_.attention.mechanism == Mechanism::kGaussian) {
    const GaussianAttentionState<T> prev = s.gaussian;
    gaussian_step<T>(prev, ws.hat[0], ws.hat[1], s.gaussian, ws.weights);
  } else {
    const GmmAttentionState<T> prev = s.gmm;
    gmm_step<T>(config_.attention, prev, ws.hat, s.gmm, ws.weights);
  }
  context_vector<T>(ws.weights, encoded.values, d, s.context);

  std::copy(s.context.begin(), s.context.end(), ws.dec_in.begin());
  std::copy(s.attention_rnn.h.begin(), s.attention_rnn.h.end(),
            ws.dec_in.begin() + static_cast<std::ptrdiff_t>(d));
  lstm_step_into<T>(decoder_rnn_, ws.dec_in, s.decoder_rnn.h, s.decoder_rnn.c, ws.dec_next.h,
                    ws.dec_next.c, ws.gates_dec, counter);
  std::swap(s.decoder_rnn, ws.dec_next);

  std::copy(output_bias_.begin(), output_bias_.end(), ws.frames.begin());
  output_.multiply_accumulate(s.decoder_rnn.h, ws.frames);
}

template <std::floating_point T>
DecodeStepResult<T> InferenceModel<T>::decode_step(const DecoderState<T>& prev,
                                                   std::span<const T> y_prev,
                                                   const EncoderOutput<T>& encoded) const {
  Workspace ws = make_workspace(encoded.length);
  DecodeStepResult<T> r;
  r.state = prev;
  advance(r.state, y_prev, encoded, ws, nullptr);
  r.frames = ws.frames;
  r.alignment.weights = ws.weights;
  r.alignment.mechanism = config_.attention.mechanism;
  r.alignment.step = config_.attention.mechanism == Mechanism::kGaussian ? r.state.gaussian.step
                                                                         : r.state.gmm.step;
  return r;
}

template <std::floating_point T>
std::vector<T> InferenceModel<T>::postnet(std::span<const T> frames, std::size_t count) const {
  const std::size_t mel = config_.mel_dim;
  if (frames.size() != count * mel) throw DimensionError("postnet: frame buffer size mismatch");
  const std::size_t hidden = config_.postnet_dim;
  LstmState<T> state = zero_state<T>(hidden), next = zero_state<T>(hidden);
  std::vector<T> gates(4 * hidden);
  std::vector<T> out(count * mel);
  for (std::size_t t = 0; t < count; ++t) {
    lstm_step_into<T>(postnet_rnn_, frames.subspan(t * mel, mel), state.h, state.c, next.h,
                      next.c, gates);
    std::swap(state, next);
    const auto y = std::span<T>(out).subspan(t * mel, mel);
    std::copy(postnet_out_bias_.begin(), postnet_out_bias_.end(), y.begin());
    postnet_out_.multiply_accumulate(state.h, y);
  }
  return out;
}

template <std::floating_point T>
DecodeTrace InferenceModel<T>::infer(std::span<const int> phonemes,
                                     const InferOptions& options) const {
  const EncoderOutput<T> encoded = encode(phonemes);
  const std::size_t length = encoded.length;
  const std::size_t budget = options.max_steps ? options.max_steps : config_.max_decode_steps;
  const std::size_t mel = config_.mel_dim;
  const Mechanism mech = config_.attention.mechanism;
  const T stop_at = static_cast<T>(length) + T(1);

  DecodeTrace trace;
  trace.mechanism = mech;
  trace.input_length = length;
  trace.initial_mu = config_.attention.initial_mu;
  DecoderState<T> state = initial_state();
  Workspace ws = make_workspace(length);
  std::vector<T> y_prev(config_.step_output_dim(), T(0));
  std::vector<T> frames;
  bool stopped = false;
  for (std::size_t step = 0; step < budget; ++step) {
    advance(state, y_prev, encoded, ws, nullptr);
    frames.insert(frames.end(), ws.frames.begin(), ws.frames.end());
    y_prev = ws.frames;
    trace.alignments.emplace_back(ws.weights.begin(), ws.weights.end());
    const T position = state.position(mech);
    trace.mu.push_back(static_cast<double>(position));
    if (mech == Mechanism::kGaussian) trace.sigma.push_back(static_cast<double>(state.gaussian.sigma));
    if (options.use_stop_rule && position >= stop_at) {
      stopped = true;
      break;
    }
  }
  trace.stop_step = trace.mu.size();
  trace.truncated = options.use_stop_rule && !stopped;

  const std::size_t count = frames.size() / mel;
  const std::size_t delay = config_.delay_frames;
  // Pad with copies of the last frame so the delayed post-net covers all frames.
  std::vector<T> padded = frames;
  for (std::size_t p = 0; p < delay; ++p) {
    padded.insert(padded.end(), frames.end() - static_cast<std::ptrdiff_t>(mel), frames.end());
  }
  const std::vector<T> post = postnet(padded, count + delay);
  auto to_tensor = [&](const std::vector<T>& src, std::size_t first_row) {
    Tensor t(count, mel);
    for (std::size_t i = 0; i < count * mel; ++i) t[i] = static_cast<double>(src[first_row * mel + i]);
    return t;
  };
  trace.y_pre = to_tensor(frames, 0);
  trace.y_post = to_tensor(post, 0);
  trace.y_out = to_tensor(post, delay);
  return trace;
}

template <std::floating_point T>
T InferenceModel<T>::run_decoder(const EncoderOutput<T>& encoded, std::size_t steps,
                                 MultiplyCounter* lstm_counter) const {
  DecoderState<T> state = initial_state();
  Workspace ws = make_workspace(encoded.length);
  std::vector<T> y_prev(config_.step_output_dim(), T(0));
  T checksum = T(0);
  for (std::size_t step = 0; step < steps; ++step) {
    advance(state, y_prev, encoded, ws, lstm_counter);
    std::copy(ws.frames.begin(), ws.frames.end(), y_prev.begin());
    checksum += ws.frames[0];
  }
  return checksum;
}

template class InferenceModel<float>;
template class InferenceModel<double>;

DecodeTrace infer(const ModelBundle& model, std::span<const int> phonemes,
                  const InferOptions& options) {
  if (model.precision == Precision::kF32) {
    return InferenceModel<float>(model).infer(phonemes, options);
  }
  return InferenceModel<double>(model).infer(phonemes, options);
}

}  // namespace feather
