#include "feather/robustness.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "feather/error.hpp"
#include "feather/inference.hpp"

namespace feather {

double coverage_error(const DecodeTrace& trace) {
  const std::size_t length = trace.input_length;
  if (length == 0) throw ContractError("coverage_error: trace has no input length");
  std::vector<bool> covered(length, false);
  for (const auto& alignment : trace.alignments) {
    for (std::size_t j = 0; j < length && j < alignment.size(); ++j) {
      if (alignment[j] > kCoverageThreshold) covered[j] = true;
    }
  }
  std::size_t missed = 0;
  for (bool c : covered) missed += c ? 0 : 1;
  return static_cast<double>(missed) / static_cast<double>(length);
}

double repetition_proxy(const DecodeTrace& trace, std::size_t frames_per_symbol) {
  const std::size_t steps = trace.mu.size();
  if (steps == 0) return 0.0;
  const std::size_t limit = 3 * frames_per_symbol;
  std::size_t stalled = 0;
  std::size_t run = 0;
  double previous = trace.initial_mu;
  for (std::size_t i = 0; i < steps; ++i) {
    if (trace.mu[i] - previous < kStallAdvance) {
      ++run;
    } else {
      if (run > limit) stalled += run;
      run = 0;
    }
    previous = trace.mu[i];
  }
  if (run > limit) stalled += run;
  return static_cast<double>(stalled) / static_cast<double>(steps);
}

RobustnessSummary robustness_eval(const ModelBundle& model, std::span<const std::vector<int>> suite,
                                  std::size_t frames_per_symbol, std::string label) {
  if (frames_per_symbol < 1) throw ConfigError("robustness: frames_per_symbol must be >= 1");
  RobustnessSummary s;
  s.label = label.empty() ? std::string(to_string(model.config.attention.mechanism)) : std::move(label);
  const std::size_t r = model.config.reduction_factor;
  for (const std::vector<int>& input : suite) {
    InferOptions opts;
    opts.max_steps = (3 * frames_per_symbol * input.size() + r - 1) / r;
    const DecodeTrace trace = infer(model, input, opts);
    RobustnessRecord rec;
    rec.input_length = input.size();
    rec.steps = trace.steps();
    rec.terminated = !trace.truncated;
    rec.coverage_error = coverage_error(trace);
    rec.repetition = repetition_proxy(trace, frames_per_symbol);
    s.non_termination += rec.terminated ? 0.0 : 1.0;
    s.coverage_error += rec.coverage_error;
    s.repetition += rec.repetition;
    s.records.push_back(rec);
  }
  if (!s.records.empty()) {
    const double n = static_cast<double>(s.records.size());
    s.non_termination /= n;
    s.coverage_error /= n;
    s.repetition /= n;
  }
  return s;
}

void write_robustness_csv(const std::filesystem::path& path, std::span<const RobustnessSummary> rows) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "model,inputs,non_termination,coverage_error,repetition_proxy,aggregate\n";
  for (const RobustnessSummary& s : rows) {
    out << s.label << ',' << s.records.size() << ',' << s.non_termination << ',' << s.coverage_error
        << ',' << s.repetition << ',' << s.aggregate() << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file << out.str();
}

}  // namespace feather
