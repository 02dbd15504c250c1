#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feather/tensor.hpp"

namespace feather {

using AlignmentMatrix = std::vector<std::vector<double>>;

// One row per decode step, one column per input position, 6 decimals.
std::string alignment_csv(const AlignmentMatrix& alignments);
void write_alignment_csv(const std::filesystem::path& path, const AlignmentMatrix& alignments);

// Binary 8-bit PGM (P5): width = input length, height = decode steps.
// Values are scaled by the matrix maximum so the brightest cell is 255.
std::string alignment_pgm(const AlignmentMatrix& alignments);
void write_alignment_pgm(const std::filesystem::path& path, const AlignmentMatrix& alignments);

// Frames as CSV with full double precision.
void write_frames_csv(const std::filesystem::path& path, const Tensor& frames);

}  // namespace feather
