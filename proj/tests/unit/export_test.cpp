#include <sstream>

#include <gtest/gtest.h>

#include "feather/alignment_export.hpp"
#include "feather/error.hpp"
#include "temp_dir.hpp"

namespace feather {
namespace {

TEST(AlignmentCsv, SixDecimals) {
  const AlignmentMatrix a = {{0.5, 0.25, 1.0 / 3.0}, {0.0, 1.0, 1e-9}};
  EXPECT_EQ(alignment_csv(a), "0.500000,0.250000,0.333333\n0.000000,1.000000,0.000000\n");
}

TEST(AlignmentCsv, RaggedRowsAreDimensionErrors) {
  const AlignmentMatrix a = {{0.5, 0.25}, {1.0}};
  EXPECT_THROW(alignment_csv(a), DimensionError);
  EXPECT_THROW(alignment_pgm(a), DimensionError);
}

TEST(AlignmentPgm, HeaderAndScaling) {
  const AlignmentMatrix a = {{0.0, 0.5}, {0.25, 0.5}, {0.0, 0.0}};
  const std::string pgm = alignment_pgm(a);
  const std::string header = "P5\n2 3\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 6);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const auto px = [&](std::size_t i) { return static_cast<unsigned char>(pgm[header.size() + i]); };
  EXPECT_EQ(px(0), 0);
  EXPECT_EQ(px(1), 255);
  EXPECT_EQ(px(2), 128);
  EXPECT_EQ(px(3), 255);
  EXPECT_EQ(px(5), 0);
}

TEST(AlignmentPgm, AllZeroIsBlack) {
  const std::string pgm = alignment_pgm({{0.0, 0.0}});
  EXPECT_EQ(pgm, std::string("P5\n2 1\n255\n") + std::string(2, '\0'));
}

TEST(FramesCsv, FullPrecisionRoundTrip) {
  Tensor t(2, 2);
  t(0, 0) = 0.1;
  t(0, 1) = -1.0 / 3.0;
  t(1, 0) = 1e-300;
  t(1, 1) = 2.0;
  testing::TempDir dir;
  write_frames_csv(dir / "f.csv", t);
  std::istringstream in(testing::read_file(dir / "f.csv"));
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
  }
  ASSERT_EQ(values.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(values[i], t[i]);
}

TEST(Export, UnwritablePathIsIoError) {
  EXPECT_THROW(write_alignment_csv("/nonexistent/dir/a.csv", {{1.0}}), IoError);
}

}  // namespace
}  // namespace feather
