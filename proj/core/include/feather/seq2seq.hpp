#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "feather/decode_trace.hpp"
#include "feather/model_bundle.hpp"
#include "feather/tape.hpp"

// Differentiable encoder / attention-RNN / decoder / post-net stack recorded
// on a Tape, plus the training objective.
namespace feather {

struct LossTerms {
  Var total;
  Var l1_pre;
  Var l1_post;
  Var stop;
};

struct LossValues {
  double total = 0.0;
  double l1_pre = 0.0;
  double l1_post = 0.0;
  double stop = 0.0;
};

// |mu_T - (J + 1)|.
Var attentive_stop_loss(Var mu_last, std::size_t input_length);
double attentive_stop_loss(const DecodeTrace& trace, std::size_t input_length);

// (1/T) sum |y' - y| + (1/(T-d)) sum_{i<=T-d} |y''_{i+d} - y_i| + lambda L_stop,
// with both L1 terms also averaged over mel bins.
LossTerms total_loss(Var y_pre, Var y_post, Var mu_last, const Tensor& y_ref,
                     std::size_t input_length, std::size_t delay, double lambda);
LossValues total_loss(const Tensor& y_ref, const DecodeTrace& trace, std::size_t input_length,
                      std::size_t delay, double lambda);

struct TeacherForcedOutput {
  Var y_pre;    // [T x mel]
  Var y_post;   // [T x mel]
  Var mu_last;  // [1 x 1]
  std::size_t decode_steps = 0;
  std::vector<std::vector<double>> alignments;
  std::vector<double> mu;
};

// Model parameters bound as tape variables.
class GraphModel {
 public:
  GraphModel(Tape& tape, const ModelBundle& model);

  const ModelConfig& config() const { return config_; }
  Var param(std::string_view name) const;
  // Tape variables in the bundle's parameter order.
  std::span<const Var> parameters() const { return vars_; }

  Var encode(std::span<const int> phonemes) const;
  Var postnet(Var y_pre) const;
  // Decoding with ground-truth previous frames; ceil(T / r) decode steps.
  TeacherForcedOutput teacher_forced(std::span<const int> phonemes, const Tensor& y_ref) const;
  // Forward pass plus the total loss.
  LossTerms loss(std::span<const int> phonemes, const Tensor& y_ref) const;

 private:
  struct LstmOut {
    Var h;
    Var c;
  };
  LstmOut lstm(std::string_view prefix, Var x, Var h, Var c) const;

  Tape& tape_;
  ModelConfig config_;
  const ParameterSet& params_;
  std::vector<Var> vars_;
};

}  // namespace feather
