#pragma once

#include <cstddef>
#include <string>

#include "feather/attention.hpp"

namespace feather {

struct ModelConfig {
  std::size_t vocab_size = 32;
  std::size_t embed_dim = 16;
  // Output width of the bidirectional encoder; each direction gets half.
  std::size_t encoder_dim = 32;
  std::size_t attention_rnn_dim = 32;
  std::size_t decoder_rnn_dim = 64;
  std::size_t postnet_dim = 256;
  std::size_t mel_dim = 16;
  std::size_t reduction_factor = 2;
  std::size_t delay_frames = 5;
  double stop_lambda = 0.001;
  AttentionConfig attention{};
  std::size_t max_decode_steps = 500;

  void validate() const;

  std::size_t frames_per_step() const { return reduction_factor; }
  std::size_t step_output_dim() const { return reduction_factor * mel_dim; }
  std::size_t attention_rnn_input_dim() const { return encoder_dim + step_output_dim(); }
  std::size_t decoder_rnn_input_dim() const { return encoder_dim + attention_rnn_dim; }
  // Decode steps needed for `frames` output frames.
  std::size_t steps_for_frames(std::size_t frames) const {
    return (frames + reduction_factor - 1) / reduction_factor;
  }
};

}  // namespace feather
