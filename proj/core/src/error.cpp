#include "feather/error.hpp"

namespace feather {

std::string_view error_class(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension_error";
    case ErrorKind::kContract:  return "contract_error";
    case ErrorKind::kNumeric:   return "numeric_error";
    case ErrorKind::kConfig:    return "config_error";
    case ErrorKind::kInput:     return "input_error";
    case ErrorKind::kIo:        return "io_error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace feather
