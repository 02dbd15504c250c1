#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "feather/attention.hpp"
#include "feather/block_sparse.hpp"
#include "feather/decode_trace.hpp"
#include "feather/model_bundle.hpp"

// Tape-free forward model for autoregressive inference. Pruned kernels of the
// bundle run through the block-sparse matvec; everything else stays dense.
namespace feather {

template <std::floating_point T>
struct EncoderOutput {
  std::size_t length = 0;  // J
  std::size_t dim = 0;     // D
  std::vector<T> values;   // row-major [J x D]
};

template <std::floating_point T>
struct DecoderState {
  LstmState<T> attention_rnn;
  LstmState<T> decoder_rnn;
  std::vector<T> context;
  GaussianAttentionState<T> gaussian;
  GmmAttentionState<T> gmm;

  // Position used by the stop rule.
  T position(Mechanism m) const { return m == Mechanism::kGaussian ? gaussian.mu : gmm.mean_position(); }
};

template <std::floating_point T>
struct DecodeStepResult {
  std::vector<T> frames;  // [r x mel] row-major
  AlignmentVector<T> alignment;
  DecoderState<T> state;
};

struct InferOptions {
  // 0 uses the model's max_decode_steps.
  std::size_t max_steps = 0;
  // When false, decode exactly max_steps steps.
  bool use_stop_rule = true;
};

template <std::floating_point T>
class InferenceModel {
 public:
  explicit InferenceModel(const ModelBundle& model);

  const ModelConfig& config() const { return config_; }

  EncoderOutput<T> encode(std::span<const int> phonemes) const;
  DecoderState<T> initial_state() const;

  // One decode step: attention RNN, attention, context, decoder RNN, output
  // head. Pure; returns the new state.
  DecodeStepResult<T> decode_step(const DecoderState<T>& prev, std::span<const T> y_prev,
                                  const EncoderOutput<T>& encoded) const;

  // Post-net over frames [T x mel] row-major.
  std::vector<T> postnet(std::span<const T> frames, std::size_t count) const;

  // Free-running decoding that stops at the first step with position >= J + 1.
  DecodeTrace infer(std::span<const int> phonemes, const InferOptions& options = {}) const;

  // Steady-state decode loop used for timing; runs `steps` steps without the
  // stop rule and returns a checksum of the emitted frames. When given,
  // `lstm_counter` accumulates multiplies of the two decoder-side LSTMs.
  T run_decoder(const EncoderOutput<T>& encoded, std::size_t steps,
                MultiplyCounter* lstm_counter = nullptr) const;

  const LstmWeights<T>& attention_rnn() const { return attention_rnn_; }
  const LstmWeights<T>& decoder_rnn() const { return decoder_rnn_; }

 private:
  struct Workspace {
    std::vector<T> att_in, dec_in, gates_att, gates_dec, hat, weights, frames;
    LstmState<T> att_next, dec_next;
  };
  Workspace make_workspace(std::size_t length) const;
  void advance(DecoderState<T>& state, std::span<const T> y_prev, const EncoderOutput<T>& encoded,
               Workspace& ws, MultiplyCounter* counter) const;

  ModelConfig config_;
  std::vector<T> embedding_;
  LstmWeights<T> encoder_fwd_, encoder_bwd_, attention_rnn_, decoder_rnn_, postnet_rnn_;
  AttentionProjection<T> projection_;
  DenseMatrix<T> output_;
  std::vector<T> output_bias_;
  DenseMatrix<T> postnet_out_;
  std::vector<T> postnet_out_bias_;
};

extern template class InferenceModel<float>;
extern template class InferenceModel<double>;

// Runs inference in the bundle's precision.
DecodeTrace infer(const ModelBundle& model, std::span<const int> phonemes,
                  const InferOptions& options = {});

}  // namespace feather
