#include "feather/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "feather/error.hpp"
#include "feather/seq2seq.hpp"

namespace feather {
namespace {

struct Accumulator {
  double total = 0.0, l1_pre = 0.0, l1_post = 0.0, stop = 0.0, mu = 0.0;
  std::size_t count = 0;

  void add(const LossTerms& t, double mu_last) {
    total += t.total.item();
    l1_pre += t.l1_pre.item();
    l1_post += t.l1_post.item();
    stop += t.stop.item();
    mu += mu_last;
    ++count;
  }
  MetricsRow row(std::int64_t step) const {
    const double n = count > 0 ? static_cast<double>(count) : 1.0;
    return {step, total / n, l1_pre / n, l1_post / n, stop / n, mu / n};
  }
};

std::string describe_nonfinite(std::int64_t step, const std::string& what) {
  return "training diverged at step " + std::to_string(step) + ": " + what +
         " is not finite; lower the learning rate or the clip norm";
}

}  // namespace

void TrainOptions::validate() const {
  if (steps < 0) throw ConfigError("train: steps must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0, 1)");
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (log_every < 1) throw ConfigError("train: log_every must be >= 1");
  if (prune) prune->validate();
}

TrainResult train_toy(const ToyDataset& data, ModelBundle model, const TrainOptions& options) {
  options.validate();
  model.config.validate();
  if (data.utterances.empty()) throw ConfigError("train: dataset is empty");
  if (data.spec.mel_dim != model.config.mel_dim) {
    throw ConfigError("train: dataset mel_dim " + std::to_string(data.spec.mel_dim) +
                      " does not match model mel_dim " + std::to_string(model.config.mel_dim));
  }
  if (data.spec.vocab_size > model.config.vocab_size) {
    throw ConfigError("train: dataset vocabulary exceeds the model vocabulary");
  }

  const Precision precision = model.precision;
  const std::vector<std::string> prunable = prunable_parameters(options.prune_targets);

  TrainResult result;
  std::vector<Tensor> velocity;
  for (const Parameter& p : model.params) velocity.emplace_back(p.value.rows(), p.value.cols());

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(data.utterances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  auto apply_pruning = [&](std::int64_t step) {
    const PruneSchedule& s = *options.prune;
    const double target = s.sparsity_at(step);
    model = prune_bundle(model, target, s.block, options.prune_targets);
    PruneEvent event{step, target, {}};
    for (const std::string& name : prunable) event.achieved.push_back(model.masks.at(name).achieved_sparsity());
    result.prune_events.push_back(std::move(event));
    for (std::size_t i = 0; i < model.params.size(); ++i) {
      const auto it = model.masks.find(model.params[i].name);
      if (it != model.masks.end()) it->second.apply(velocity[i].values());
    }
  };

  Accumulator window;
  for (std::int64_t step = 0; step < options.steps; ++step) {
    if (options.prune && options.prune->is_event(step)) apply_pruning(step);

    std::vector<Tensor> grads;
    Accumulator batch;
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Utterance& u = data.utterances[order[cursor++]];
      Tape tape(precision);
      const GraphModel graph(tape, model);
      const TeacherForcedOutput tf = graph.teacher_forced(u.phonemes, u.frames);
      const LossTerms loss = total_loss(tf.y_pre, tf.y_post, tf.mu_last, u.frames, u.phonemes.size(),
                                        model.config.delay_frames, model.config.stop_lambda);
      if (!std::isfinite(loss.total.item())) throw NumericError(describe_nonfinite(step, "loss"));
      batch.add(loss, tf.mu_last.item());
      const Gradients g = tape.backward(loss.total);
      const auto vars = graph.parameters();
      if (grads.empty()) {
        for (Var v : vars) grads.push_back(g.of(v));
      } else {
        for (std::size_t i = 0; i < vars.size(); ++i) {
          const Tensor gi = g.of(vars[i]);
          auto dst = grads[i].values();
          for (std::size_t e = 0; e < dst.size(); ++e) dst[e] += gi[e];
        }
      }
    }
    if (step == 0) result.metrics.push_back(batch.row(0));
    window.total += batch.total / static_cast<double>(batch.count);
    window.l1_pre += batch.l1_pre / static_cast<double>(batch.count);
    window.l1_post += batch.l1_post / static_cast<double>(batch.count);
    window.stop += batch.stop / static_cast<double>(batch.count);
    window.mu += batch.mu / static_cast<double>(batch.count);
    ++window.count;

    // Average over the batch, mask, clip by global norm.
    const double inv_batch = 1.0 / static_cast<double>(options.batch_size);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      for (double& v : grads[i].values()) v *= inv_batch;
      const auto it = model.masks.find(model.params[i].name);
      if (it != model.masks.end()) it->second.apply(grads[i].values());
      for (double v : grads[i].values()) norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) throw NumericError(describe_nonfinite(step, "gradient norm"));
    const double clip = norm > options.clip_norm ? options.clip_norm / norm : 1.0;

    for (std::size_t i = 0; i < grads.size(); ++i) {
      auto w = model.params[i].value.values();
      auto vel = velocity[i].values();
      const auto g = grads[i].values();
      for (std::size_t e = 0; e < w.size(); ++e) {
        vel[e] = options.momentum * vel[e] + clip * g[e];
        w[e] = round_to(w[e] - options.learning_rate * vel[e], precision);
      }
      const auto it = model.masks.find(model.params[i].name);
      if (it != model.masks.end()) it->second.apply(w);
    }

    const std::int64_t done = step + 1;
    if (done % options.log_every == 0 || done == options.steps) {
      result.metrics.push_back(window.row(done));
      window = {};
    }
    if (options.on_step) options.on_step(done, model);
  }
  // A schedule ending exactly at `steps` still gets its final event.
  if (options.prune && options.steps > 0 && options.prune->is_event(options.steps)) {
    apply_pruning(options.steps);
  }
  result.model = std::move(model);
  return result;
}

EvalSummary evaluate_teacher_forced(const ModelBundle& model, std::span<const Utterance> utterances) {
  EvalSummary s;
  for (const Utterance& u : utterances) {
    Tape tape(model.precision);
    const GraphModel graph(tape, model);
    const TeacherForcedOutput tf = graph.teacher_forced(u.phonemes, u.frames);
    const LossTerms t = total_loss(tf.y_pre, tf.y_post, tf.mu_last, u.frames, u.phonemes.size(),
                                   model.config.delay_frames, model.config.stop_lambda);
    s.total_loss += t.total.item();
    s.l1_pre += t.l1_pre.item();
    s.l1_post += t.l1_post.item();
    s.stop_loss += t.stop.item();
    s.mean_mu_T += tf.mu_last.item();
    ++s.utterances;
  }
  if (s.utterances > 0) {
    const double n = static_cast<double>(s.utterances);
    s.total_loss /= n;
    s.l1_pre /= n;
    s.l1_post /= n;
    s.stop_loss /= n;
    s.mean_mu_T /= n;
  }
  return s;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "step,total_loss,l1_pre,l1_post,stop_loss,mean_mu_T\n";
  for (const MetricsRow& r : rows) {
    out << r.step << ',' << r.total_loss << ',' << r.l1_pre << ',' << r.l1_post << ','
        << r.stop_loss << ',' << r.mean_mu_T << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file << out.str();
  if (!file) throw IoError("failed writing " + path.string());
}

}  // namespace feather
