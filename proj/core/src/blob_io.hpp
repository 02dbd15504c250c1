#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "feather/error.hpp"
#include "feather/tensor.hpp"

namespace feather::detail {

static_assert(std::endian::native == std::endian::little,
              "blob encoding assumes a little-endian host");

inline void append_values(std::vector<std::uint8_t>& out, std::span<const double> values,
                          Precision precision) {
  if (precision == Precision::kF64) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
    out.insert(out.end(), p, p + values.size() * sizeof(double));
    return;
  }
  for (double v : values) {
    const float f = static_cast<float>(v);
    std::uint8_t bytes[sizeof(float)];
    std::memcpy(bytes, &f, sizeof(float));
    out.insert(out.end(), bytes, bytes + sizeof(float));
  }
}

inline std::size_t value_bytes(Precision precision) {
  return precision == Precision::kF64 ? sizeof(double) : sizeof(float);
}

inline std::vector<double> read_values(std::span<const std::uint8_t> blob, std::size_t offset,
                                       std::size_t count, Precision precision) {
  const std::size_t width = value_bytes(precision);
  if (offset + count * width > blob.size()) throw IoError("blob truncated");
  std::vector<double> out(count);
  const std::uint8_t* p = blob.data() + offset;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    if (precision == Precision::kF64) {
      std::memcpy(&out[i], p, sizeof(double));
    } else {
      float f;
      std::memcpy(&f, p, sizeof(float));
      out[i] = f;
    }
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing " + path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace feather::detail
