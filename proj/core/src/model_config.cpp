#include "feather/model_config.hpp"

#include <cmath>

#include "feather/error.hpp"

namespace feather {

void ModelConfig::validate() const {
  auto require_positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  require_positive(vocab_size, "vocab_size");
  require_positive(embed_dim, "embed_dim");
  require_positive(encoder_dim, "encoder_dim");
  require_positive(attention_rnn_dim, "attention_rnn_dim");
  require_positive(decoder_rnn_dim, "decoder_rnn_dim");
  require_positive(postnet_dim, "postnet_dim");
  require_positive(mel_dim, "mel_dim");
  require_positive(reduction_factor, "reduction_factor");
  require_positive(max_decode_steps, "max_decode_steps");
  if (encoder_dim % 2 != 0) {
    throw ConfigError("encoder_dim must be even (split across two directions)");
  }
  if (!(stop_lambda >= 0.0) || !std::isfinite(stop_lambda)) {
    throw ConfigError("stop_lambda must be a finite value >= 0");
  }
  attention.validate();
}

}  // namespace feather
