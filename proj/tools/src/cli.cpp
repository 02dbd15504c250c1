#include "feather_cli/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "feather/alignment_export.hpp"
#include "feather/bench_decoder.hpp"
#include "feather/error.hpp"
#include "feather/inference.hpp"
#include "feather/robustness.hpp"
#include "feather/trainer.hpp"

namespace feather::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal_error\n"
    "  2  usage_error      unknown flag, missing or malformed argument\n"
    "  3  config_error     configuration invariant violated\n"
    "  4  input_error      invalid input data\n"
    "  5  io_error         file missing, unreadable or malformed\n"
    "  6  numeric_error    NaN or Inf during computation\n"
    "  7  dimension_error  shape mismatch\n"
    "  8  contract_error   precondition violated\n"
    "Failures print one line to stderr: error[<class>]: <message>\n"
    "FEATHER_THREADS caps internal parallelism (default 1).";

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return kConfig;
    case ErrorKind::kInput: return kInput;
    case ErrorKind::kIo: return kIo;
    case ErrorKind::kNumeric: return kNumeric;
    case ErrorKind::kDimension: return kDimension;
    case ErrorKind::kContract: return kContract;
  }
  return kInternal;
}

BlockShape parse_block(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const auto rows = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    const auto cols = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1 || rows < 1 || cols < 1) throw std::invalid_argument(text);
    return {rows, cols};
  } catch (const std::logic_error&) {
    throw ConfigError("block shape must look like 16x1, got '" + text + "'");
  }
}

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> ids;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw InputError("phoneme list must be comma-separated integers, got '" + item + "'");
    }
  }
  if (ids.empty()) throw InputError("phoneme list is empty");
  return ids;
}

void write_text(const fs::path& path, const std::string& text) {
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) throw IoError("cannot write " + path.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw IoError("failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

struct ModelFlags {
  std::string mechanism = "gaussian";
  int components = 5;
  double lambda = 0.001;
  std::size_t delay = 5;
  std::size_t reduction = 2;
  std::size_t embed_dim = 16;
  std::size_t encoder_dim = 32;
  std::size_t attention_dim = 32;
  std::size_t decoder_dim = 64;
  std::size_t postnet_dim = 256;
  std::size_t max_decode_steps = 500;
  double initial_mu = 0.0;
  double delta_bias_target = 1.0;
  double sigma_bias_target = 10.0;

  void add_to(CLI::App& app) {
    app.add_option("--mechanism", mechanism, "attention mechanism: gaussian | gmmv2b")
        ->check(CLI::IsMember({"gaussian", "gmmv2b", "gmm"}));
    app.add_option("--components", components, "GMMv2b mixture components K");
    app.add_option("--lambda", lambda, "weight of the attentive stop loss");
    app.add_option("--delay", delay, "post-net delay d in frames");
    app.add_option("--reduction", reduction, "frames predicted per decode step r");
    app.add_option("--embed-dim", embed_dim, "phoneme embedding width");
    app.add_option("--encoder-dim", encoder_dim, "bidirectional encoder output width (even)");
    app.add_option("--attention-dim", attention_dim, "attention RNN units");
    app.add_option("--decoder-dim", decoder_dim, "decoder RNN units");
    app.add_option("--postnet-dim", postnet_dim, "post-net LSTM units");
    app.add_option("--max-decode-steps", max_decode_steps, "inference step budget");
    app.add_option("--initial-mu", initial_mu, "attention position before the first step");
    app.add_option("--gmm-delta-init", delta_bias_target, "softplus of the GMMv2b delta bias");
    app.add_option("--gmm-sigma-init", sigma_bias_target, "softplus of the GMMv2b sigma bias");
  }

  ModelConfig build(std::size_t vocab, std::size_t mel) const {
    ModelConfig c;
    c.vocab_size = vocab;
    c.mel_dim = mel;
    c.embed_dim = embed_dim;
    c.encoder_dim = encoder_dim;
    c.attention_rnn_dim = attention_dim;
    c.decoder_rnn_dim = decoder_dim;
    c.postnet_dim = postnet_dim;
    c.reduction_factor = reduction;
    c.delay_frames = delay;
    c.stop_lambda = lambda;
    c.max_decode_steps = max_decode_steps;
    c.attention.mechanism = parse_mechanism(mechanism);
    c.attention.components = components;
    c.attention.initial_mu = initial_mu;
    if (!(delta_bias_target > 0.0) || !(sigma_bias_target > 0.0)) {
      throw ConfigError("GMMv2b bias targets must be > 0");
    }
    c.attention.delta_bias = softplus_inverse(delta_bias_target);
    c.attention.sigma_bias = softplus_inverse(sigma_bias_target);
    c.validate();
    return c;
  }
};

struct PruneFlags {
  double sparsity = 0.9;
  std::string block = "16x1";
  bool skip_attention_rnn = false;
  bool skip_decoder_rnn = false;

  void add_to(CLI::App& app) {
    app.add_option("--sparsity", sparsity, "target sparsity S");
    app.add_option("--block", block, "block shape ROWSxCOLS");
    app.add_flag("--no-prune-attention-rnn", skip_attention_rnn, "keep the attention RNN dense");
    app.add_flag("--no-prune-decoder-rnn", skip_decoder_rnn, "keep the decoder RNN dense");
  }
  PruneTargets targets() const { return {!skip_attention_rnn, !skip_decoder_rnn}; }
};

int cmd_gen_data(const ToyTaskSpec& spec, const std::string& out_dir, std::ostream& out) {
  const ToyDataset data = generate_toy_dataset(spec);
  save_dataset(data, out_dir);
  out << "wrote " << data.utterances.size() << " utterances to " << out_dir << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"feather: monotonic-attention seq2seq toolkit with block-sparse decoding"};
  app.name(args.empty() ? "feather" : fs::path(args[0]).filename().string());
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // gen-data
  ToyTaskSpec spec;
  std::string data_out;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic phoneme-to-frame dataset");
  gen->add_option("--out", data_out, "output directory")->required();
  gen->add_option("--count", spec.count, "number of utterances");
  gen->add_option("--vocab", spec.vocab_size, "symbol vocabulary size");
  gen->add_option("--min-length", spec.min_length, "shortest input J");
  gen->add_option("--max-length", spec.max_length, "longest input J");
  gen->add_option("--frames-per-symbol", spec.frames_per_symbol, "frames k owned by each symbol");
  gen->add_option("--jitter", spec.jitter, "duration jitter (k +- jitter)");
  gen->add_option("--mel", spec.mel_dim, "frame width");
  gen->add_option("--noise", spec.noise_std, "Gaussian noise std on frames");
  gen->add_option("--seed", spec.seed, "random seed");

  // train-toy
  ModelFlags model_flags;
  TrainOptions train;
  train.steps = 20000;
  PruneFlags train_prune;
  PruneSchedule schedule;
  std::string train_data, train_out, metrics_path, precision = "f32", curve = "cubic";
  std::uint64_t init_seed = 1;
  bool prune_enabled = false;
  auto* tr = app.add_subcommand("train-toy", "train a model on a synthetic dataset");
  tr->add_option("--data", train_data, "dataset directory from gen-data")->required();
  tr->add_option("--out", train_out, "output bundle directory")->required();
  tr->add_option("--metrics", metrics_path, "metrics CSV (default: <out>/metrics.csv)");
  model_flags.add_to(*tr);
  tr->add_option("--steps", train.steps, "training steps");
  tr->add_option("--lr", train.learning_rate, "learning rate");
  tr->add_option("--momentum", train.momentum, "SGD momentum (0 = plain SGD)");
  tr->add_option("--clip", train.clip_norm, "global gradient-norm clip");
  tr->add_option("--batch", train.batch_size, "utterances per step");
  tr->add_option("--log-every", train.log_every, "steps per metrics row");
  tr->add_option("--seed", train.seed, "data-order seed");
  tr->add_option("--init-seed", init_seed, "weight initialisation seed");
  tr->add_option("--precision", precision, "f32 | f64")->check(CLI::IsMember({"f32", "f64"}));
  tr->add_flag("--prune", prune_enabled, "enable gradual block pruning of the decoder RNNs");
  tr->add_option("--prune-start", schedule.start_step, "first pruning step");
  tr->add_option("--prune-interval", schedule.interval, "steps between pruning events");
  tr->add_option("--prune-end", schedule.end_step, "step at which the target is reached");
  tr->add_option("--curve", curve, "cubic | linear")->check(CLI::IsMember({"cubic", "linear"}));
  train_prune.add_to(*tr);

  // infer
  std::string infer_bundle, infer_out, infer_ids, infer_data;
  std::size_t infer_index = 0, infer_max_steps = 0;
  auto* inf = app.add_subcommand("infer", "decode with the stop rule and export frames and alignment");
  inf->add_option("--bundle", infer_bundle, "model bundle directory")->required();
  inf->add_option("--out", infer_out, "output directory")->required();
  auto* ids_opt = inf->add_option("--phonemes", infer_ids, "comma-separated phoneme ids");
  auto* data_opt = inf->add_option("--data", infer_data, "dataset directory to take the input from");
  ids_opt->excludes(data_opt);
  inf->add_option("--index", infer_index, "utterance index within --data");
  inf->add_option("--max-steps", infer_max_steps, "step budget (0 = bundle max_decode_steps)");

  // prune
  std::string prune_in, prune_out;
  PruneFlags offline;
  auto* pr = app.add_subcommand("prune", "magnitude-prune a bundle's decoder RNN kernels offline");
  pr->add_option("--bundle", prune_in, "input bundle directory")->required();
  pr->add_option("--out", prune_out, "output bundle directory")->required();
  offline.add_to(*pr);

  // eval-robust
  std::vector<std::string> robust_bundles;
  std::string robust_csv, suite_name = "all";
  StressOptions stress;
  std::size_t robust_k = 4;
  auto* ev = app.add_subcommand("eval-robust", "stress-suite robustness metrics per model");
  ev->add_option("--bundle", robust_bundles, "bundle directories, one CSV row each")->required();
  ev->add_option("--suite", suite_name, "all | very_short | very_long | repeated_symbol")
      ->check(CLI::IsMember({"all", "very_short", "very_long", "repeated_symbol"}));
  ev->add_option("--count", stress.count, "inputs per suite");
  ev->add_option("--train-max-length", stress.training_max_length, "longest training input J");
  ev->add_option("--frames-per-symbol", robust_k, "frames k per symbol in training data");
  ev->add_option("--seed", stress.seed, "suite seed");
  ev->add_option("--csv", robust_csv, "output CSV path");

  // bench
  std::string bench_dense, bench_sparse, bench_csv;
  BenchOptions bench;
  std::size_t bench_hidden = 256, bench_mel = 80, bench_encoder = 128;
  std::uint64_t bench_seed = 1;
  PruneFlags bench_prune;
  auto* be = app.add_subcommand("bench", "time the dense vs sparse decoder loop (single thread)");
  auto* dense_opt = be->add_option("--dense", bench_dense, "dense bundle (default: synthetic model)");
  auto* sparse_opt = be->add_option("--sparse", bench_sparse, "sparse bundle");
  dense_opt->needs(sparse_opt);
  sparse_opt->needs(dense_opt);
  be->add_option("--hidden", bench_hidden, "synthetic model: units of both decoder RNNs");
  be->add_option("--mel", bench_mel, "synthetic model: frame width");
  be->add_option("--encoder-dim", bench_encoder, "synthetic model: encoder width");
  be->add_option("--seed", bench_seed, "synthetic model seed");
  bench_prune.add_to(*be);
  be->add_option("--frames", bench.frames, "frames decoded per timed run");
  be->add_option("--warmup", bench.warmup, "untimed warm-up runs");
  be->add_option("--repeats", bench.repeats, "timed runs (median reported)");
  be->add_option("--input-length", bench.input_length, "input length J");
  be->add_option("--csv", bench_csv, "output CSV path");

  // count-ops
  std::size_t ops_input = 256, ops_hidden = 256;
  double ops_sparsity = 0.9;
  auto* co = app.add_subcommand("count-ops", "print 4(1-S)(I*H + H^2) for one sparse LSTM layer");
  co->add_option("--input", ops_input, "input width I")->required();
  co->add_option("--hidden", ops_hidden, "hidden units H")->required();
  co->add_option("--sparsity", ops_sparsity, "sparsity S")->check(CLI::Range(0.0, 1.0));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error[usage_error]: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(spec, data_out, out);

    if (tr->parsed()) {
      const ToyDataset data = load_dataset(train_data);
      const ModelConfig config = model_flags.build(data.spec.vocab_size, data.spec.mel_dim);
      ModelBundle model = create_model(config, init_seed, parse_precision(precision));
      if (prune_enabled) {
        schedule.target_sparsity = train_prune.sparsity;
        schedule.block = parse_block(train_prune.block);
        schedule.curve = parse_prune_curve(curve);
        schedule.validate();
        train.prune = schedule;
        train.prune_targets = train_prune.targets();
      }
      TrainResult result = train_toy(data, std::move(model), train);
      save_bundle(result.model, train_out);
      write_metrics_csv(metrics_path.empty() ? fs::path(train_out) / "metrics.csv" : fs::path(metrics_path),
                        result.metrics);
      out << "trained " << train.steps << " steps";
      if (!result.metrics.empty()) {
        out << "; final window loss " << result.metrics.back().total_loss << ", stop loss "
            << result.metrics.back().stop_loss;
      }
      out << "\n";
      return kOk;
    }

    if (inf->parsed()) {
      const ModelBundle model = load_bundle(infer_bundle);
      std::vector<int> ids;
      if (!infer_data.empty()) {
        const ToyDataset data = load_dataset(infer_data);
        if (infer_index >= data.utterances.size()) {
          throw InputError("--index " + std::to_string(infer_index) + " outside dataset of " +
                           std::to_string(data.utterances.size()));
        }
        ids = data.utterances[infer_index].phonemes;
      } else if (!infer_ids.empty()) {
        ids = parse_ids(infer_ids);
      } else {
        throw ConfigError("infer needs --phonemes or --data");
      }
      InferOptions options;
      options.max_steps = infer_max_steps;
      const DecodeTrace trace = infer(model, ids, options);
      make_dirs(infer_out);
      const fs::path dir(infer_out);
      write_frames_csv(dir / "frames.csv", trace.y_out);
      write_frames_csv(dir / "frames_pre.csv", trace.y_pre);
      write_alignment_csv(dir / "alignment.csv", trace.alignments);
      write_alignment_pgm(dir / "alignment.pgm", trace.alignments);
      json meta;
      meta["mechanism"] = std::string(to_string(trace.mechanism));
      meta["input_length"] = trace.input_length;
      meta["stop_step"] = trace.stop_step;
      meta["truncated"] = trace.truncated;
      meta["frames"] = trace.y_out.rows();
      meta["final_mu"] = trace.final_mu();
      meta["mu"] = trace.mu;
      write_text(dir / "meta.json", meta.dump(2) + "\n");
      out << "decoded " << trace.stop_step << " steps (" << trace.y_out.rows() << " frames)"
          << (trace.truncated ? ", truncated at the step budget" : "") << "\n";
      return kOk;
    }

    if (pr->parsed()) {
      const ModelBundle model = load_bundle(prune_in);
      const ModelBundle pruned =
          prune_bundle(model, offline.sparsity, parse_block(offline.block), offline.targets());
      save_bundle(pruned, prune_out);
      for (const auto& [name, mask] : pruned.masks) {
        out << name << ": sparsity " << mask.achieved_sparsity() << "\n";
      }
      return kOk;
    }

    if (ev->parsed()) {
      std::vector<RobustnessSummary> rows;
      for (const std::string& path : robust_bundles) {
        const ModelBundle model = load_bundle(path);
        stress.vocab_size = model.config.vocab_size;
        std::vector<std::vector<int>> suite;
        for (StressKind kind : {StressKind::kVeryShort, StressKind::kVeryLong, StressKind::kRepeatedSymbol}) {
          if (suite_name != "all" && parse_stress_kind(suite_name) != kind) continue;
          auto part = stress_suite(kind, stress);
          suite.insert(suite.end(), part.begin(), part.end());
        }
        rows.push_back(robustness_eval(model, suite, robust_k));
        const RobustnessSummary& s = rows.back();
        out << s.label << ": non_termination " << s.non_termination << ", coverage_error "
            << s.coverage_error << ", repetition " << s.repetition << ", aggregate " << s.aggregate()
            << "\n";
      }
      if (!robust_csv.empty()) write_robustness_csv(robust_csv, rows);
      return kOk;
    }

    if (be->parsed()) {
      ModelBundle dense, sparse;
      if (!bench_dense.empty()) {
        dense = load_bundle(bench_dense);
        sparse = load_bundle(bench_sparse);
      } else {
        ModelConfig c;
        c.attention_rnn_dim = bench_hidden;
        c.decoder_rnn_dim = bench_hidden;
        c.mel_dim = bench_mel;
        c.encoder_dim = bench_encoder;
        dense = create_model(c, bench_seed);
        sparse = prune_bundle(dense, bench_prune.sparsity, parse_block(bench_prune.block),
                              bench_prune.targets());
      }
      const BenchReport report = bench_decoder(dense, sparse, bench);
      out << format_report(report);
      if (!bench_csv.empty()) write_report_csv(bench_csv, report);
      return kOk;
    }

    if (co->parsed()) {
      if (ops_input < 1 || ops_hidden < 1) throw ConfigError("count-ops: I and H must be >= 1");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.1f", count_ops(ops_input, ops_hidden, ops_sparsity));
      out << buf << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error[" << error_class(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error[internal_error]: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace feather::cli
