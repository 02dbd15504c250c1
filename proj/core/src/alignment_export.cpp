#include "feather/alignment_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "feather/error.hpp"

namespace feather {
namespace {

std::size_t width_of(const AlignmentMatrix& a) {
  const std::size_t width = a.empty() ? 0 : a.front().size();
  for (const auto& row : a) {
    if (row.size() != width) throw DimensionError("alignment rows differ in length");
  }
  return width;
}

void write_all(const std::filesystem::path& path, const std::string& data) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write " + path.string());
  file << data;
  if (!file) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string alignment_csv(const AlignmentMatrix& alignments) {
  width_of(alignments);
  std::string out;
  char buf[32];
  for (const auto& row : alignments) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", row[j]);
      if (j > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_alignment_csv(const std::filesystem::path& path, const AlignmentMatrix& alignments) {
  write_all(path, alignment_csv(alignments));
}

std::string alignment_pgm(const AlignmentMatrix& alignments) {
  const std::size_t width = width_of(alignments);
  double peak = 0.0;
  for (const auto& row : alignments) {
    for (double v : row) peak = std::max(peak, v);
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(alignments.size()) + "\n255\n";
  for (const auto& row : alignments) {
    for (double v : row) {
      const double scaled = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) * 255.0 : 0.0;
      out += static_cast<char>(static_cast<unsigned char>(std::lround(scaled)));
    }
  }
  return out;
}

void write_alignment_pgm(const std::filesystem::path& path, const AlignmentMatrix& alignments) {
  write_all(path, alignment_pgm(alignments));
}

void write_frames_csv(const std::filesystem::path& path, const Tensor& frames) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < frames.rows(); ++r) {
    for (std::size_t c = 0; c < frames.cols(); ++c) {
      if (c > 0) out << ',';
      out << frames(r, c);
    }
    out << '\n';
  }
  write_all(path, out.str());
}

}  // namespace feather
