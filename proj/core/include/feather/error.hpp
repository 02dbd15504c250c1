#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feather {

enum class ErrorKind {
  kDimension,
  kContract,
  kNumeric,
  kConfig,
  kInput,
  kIo,
};

// Stable machine-readable name, e.g. "dimension_error".
std::string_view error_class(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& m) : Error(ErrorKind::kDimension, m) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& m) : Error(ErrorKind::kContract, m) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorKind::kNumeric, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorKind::kConfig, m) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& m) : Error(ErrorKind::kInput, m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::kIo, m) {}
};

}  // namespace feather
