#include "feather/seq2seq.hpp"

#include <string>

#include "feather/attention_graph.hpp"
#include "feather/error.hpp"
#include "feather/ops.hpp"

namespace feather {

using namespace ops;

Var attentive_stop_loss(Var mu_last, std::size_t input_length) {
  if (!mu_last.value().is_scalar()) throw ContractError("attentive_stop_loss: mu must be scalar");
  return abs(add_scalar(mu_last, -(static_cast<double>(input_length) + 1.0)));
}

double attentive_stop_loss(const DecodeTrace& trace, std::size_t input_length) {
  if (trace.empty()) throw ContractError("attentive_stop_loss: empty decode trace");
  return std::fabs(trace.final_mu() - (static_cast<double>(input_length) + 1.0));
}

LossTerms total_loss(Var y_pre, Var y_post, Var mu_last, const Tensor& y_ref,
                     std::size_t input_length, std::size_t delay, double lambda) {
  const std::size_t frames = y_ref.rows();
  if (frames <= delay) {
    throw ConfigError("total_loss: " + std::to_string(frames) +
                      " frames is not more than the post-net delay of " +
                      std::to_string(delay));
  }
  if (lambda < 0.0) throw ConfigError("total_loss: lambda must be >= 0");
  Tape& tape = y_pre.tape();
  const Var ref = tape.constant(y_ref);
  LossTerms t;
  t.l1_pre = l1_loss(y_pre, ref);
  t.l1_post = l1_loss(slice_rows(y_post, delay, frames), slice_rows(ref, 0, frames - delay));
  t.stop = attentive_stop_loss(mu_last, input_length);
  t.total = add(t.l1_pre, t.l1_post);
  if (lambda != 0.0) t.total = add(t.total, scale(t.stop, lambda));
  return t;
}

LossValues total_loss(const Tensor& y_ref, const DecodeTrace& trace, std::size_t input_length,
                      std::size_t delay, double lambda) {
  if (trace.empty()) throw ContractError("total_loss: empty decode trace");
  if (!trace.y_pre.same_shape(y_ref) || !trace.y_post.same_shape(y_ref)) {
    throw DimensionError("total_loss: trace frames " + trace.y_pre.shape_string() +
                         " do not match reference " + y_ref.shape_string());
  }
  Tape tape(Precision::kF64);
  const LossTerms t =
      total_loss(tape.constant(trace.y_pre), tape.constant(trace.y_post),
                 tape.constant(Tensor::scalar(trace.final_mu())), y_ref, input_length, delay,
                 lambda);
  return {t.total.item(), t.l1_pre.item(), t.l1_post.item(), t.stop.item()};
}

GraphModel::GraphModel(Tape& tape, const ModelBundle& model)
    : tape_(tape), config_(model.config), params_(model.params) {
  config_.validate();
  vars_.reserve(model.params.size());
  for (const Parameter& p : model.params) vars_.push_back(tape.variable(p.value));
}

Var GraphModel::param(std::string_view name) const { return vars_[params_.index_of(name)]; }

GraphModel::LstmOut GraphModel::lstm(std::string_view prefix, Var x, Var h, Var c) const {
  const std::string p(prefix);
  const std::size_t hidden = h.cols();
  const Var gates = add(add(linear(x, param(p + ".w_ih")), linear(h, param(p + ".w_hh"))),
                        param(p + ".bias"));
  const Var i = sigmoid(slice_cols(gates, 0, hidden));
  const Var f = sigmoid(slice_cols(gates, hidden, 2 * hidden));
  const Var g = tanh(slice_cols(gates, 2 * hidden, 3 * hidden));
  const Var o = sigmoid(slice_cols(gates, 3 * hidden, 4 * hidden));
  const Var c_next = add(mul(f, c), mul(i, g));
  return {mul(o, tanh(c_next)), c_next};
}

Var GraphModel::encode(std::span<const int> phonemes) const {
  if (phonemes.empty()) throw InputError("encode: empty phoneme sequence");
  for (int id : phonemes) {
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw InputError("encode: phoneme id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(config_.vocab_size));
    }
  }
  const std::size_t length = phonemes.size();
  const std::size_t half = config_.encoder_dim / 2;
  const Var embedded = embedding(param("embedding"), phonemes);
  const Var zero = tape_.constant(Tensor(1, half));

  std::vector<Var> forward(length), backward(length);
  LstmOut state{zero, zero};
  for (std::size_t t = 0; t < length; ++t) {
    state = lstm("encoder.fwd", slice_rows(embedded, t, t + 1), state.h, state.c);
    forward[t] = state.h;
  }
  state = {zero, zero};
  for (std::size_t t = length; t-- > 0;) {
    state = lstm("encoder.bwd", slice_rows(embedded, t, t + 1), state.h, state.c);
    backward[t] = state.h;
  }
  std::vector<Var> rows(length);
  for (std::size_t t = 0; t < length; ++t) {
    const Var both[] = {forward[t], backward[t]};
    rows[t] = concat(both, 1);
  }
  return concat(rows, 0);
}

Var GraphModel::postnet(Var y_pre) const {
  if (y_pre.cols() != config_.mel_dim) {
    throw DimensionError("postnet: expected frames of width " + std::to_string(config_.mel_dim) +
                         ", got " + y_pre.value().shape_string());
  }
  const Var zero = tape_.constant(Tensor(1, config_.postnet_dim));
  LstmOut state{zero, zero};
  std::vector<Var> out(y_pre.rows());
  for (std::size_t t = 0; t < y_pre.rows(); ++t) {
    state = lstm("postnet.rnn", slice_rows(y_pre, t, t + 1), state.h, state.c);
    out[t] = add(linear(state.h, param("postnet.out.weight")), param("postnet.out.bias"));
  }
  return concat(out, 0);
}

TeacherForcedOutput GraphModel::teacher_forced(std::span<const int> phonemes,
                                               const Tensor& y_ref) const {
  const ModelConfig& c = config_;
  if (y_ref.cols() != c.mel_dim || y_ref.rows() == 0) {
    throw DimensionError("teacher_forced: reference frames " + y_ref.shape_string() +
                         " do not have width " + std::to_string(c.mel_dim));
  }
  const std::size_t frames = y_ref.rows();
  const std::size_t length = phonemes.size();
  const std::size_t steps = c.steps_for_frames(frames);
  const std::size_t r = c.reduction_factor;
  const bool gaussian = c.attention.mechanism == Mechanism::kGaussian;
  const std::size_t k = gaussian ? 1 : static_cast<std::size_t>(c.attention.components);

  const Var encoded = encode(phonemes);
  Var context = tape_.constant(Tensor(1, c.encoder_dim));
  LstmOut att{tape_.constant(Tensor(1, c.attention_rnn_dim)),
              tape_.constant(Tensor(1, c.attention_rnn_dim))};
  LstmOut dec{tape_.constant(Tensor(1, c.decoder_rnn_dim)),
              tape_.constant(Tensor(1, c.decoder_rnn_dim))};
  Var mu = tape_.constant(Tensor::filled(1, k, c.attention.initial_mu));
  Var y_prev = tape_.constant(Tensor(1, c.step_output_dim()));

  TeacherForcedOutput out;
  out.decode_steps = steps;
  std::vector<Var> outputs;
  outputs.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const Var att_in[] = {context, y_prev};
    att = lstm("attention_rnn", concat(att_in, 1), att.h, att.c);
    const Var hat =
        add(linear(att.h, param("attention.proj.weight")), param("attention.proj.bias"));
    Var alignment, position;
    if (gaussian) {
      const auto step = graph::gaussian_attend(hat, mu, length);
      alignment = step.alignment;
      mu = step.mu;
      position = step.mu;
    } else {
      const auto step = graph::gmmv2b_attend(c.attention, hat, mu, length);
      alignment = step.alignment;
      mu = step.mu;
      position = step.mean_position;
    }
    context = graph::context_vector(alignment, encoded);
    const Var dec_in[] = {context, att.h};
    dec = lstm("decoder_rnn", concat(dec_in, 1), dec.h, dec.c);
    outputs.push_back(add(linear(dec.h, param("output.weight")), param("output.bias")));

    const auto& a = alignment.value().values();
    out.alignments.emplace_back(a.begin(), a.end());
    out.mu.push_back(position.item());
    out.mu_last = position;

    // Ground-truth frames of this step feed the next one (zero-padded past T).
    Tensor truth(1, c.step_output_dim());
    for (std::size_t f = 0; f < r; ++f) {
      const std::size_t frame = i * r + f;
      if (frame >= frames) break;
      for (std::size_t m = 0; m < c.mel_dim; ++m) truth[f * c.mel_dim + m] = y_ref(frame, m);
    }
    y_prev = tape_.constant(std::move(truth));
  }
  const Var stacked = reshape(concat(outputs, 0), steps * r, c.mel_dim);
  out.y_pre = steps * r == frames ? stacked : slice_rows(stacked, 0, frames);
  out.y_post = postnet(out.y_pre);
  return out;
}

LossTerms GraphModel::loss(std::span<const int> phonemes, const Tensor& y_ref) const {
  const TeacherForcedOutput tf = teacher_forced(phonemes, y_ref);
  return total_loss(tf.y_pre, tf.y_post, tf.mu_last, y_ref, phonemes.size(),
                    config_.delay_frames, config_.stop_lambda);
}

}  // namespace feather
