#include "tfbo/errors.hpp"

namespace tfbo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNonSpd: return "NonSPD";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kNonPositiveC: return "NonPositiveC";
    case ErrorKind::kDidNotConverge: return "DidNotConverge";
    case ErrorKind::kNonFiniteIterate: return "NonFiniteIterate";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kNonBinaryLabels: return "NonBinaryLabels";
    case ErrorKind::kConfigError: return "ConfigError";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kMaskMissing: return "MaskMissing";
    case ErrorKind::kIoError: return "IOError";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

DidNotConverge::DidNotConverge(std::size_t iterations, double residual_norm)
    : Error(ErrorKind::kDidNotConverge,
            "no convergence after " + std::to_string(iterations) +
                " iterations, residual norm " + std::to_string(residual_norm)),
      iterations_(iterations),
      residual_norm_(residual_norm) {}

ParseError::ParseError(std::size_t line, const std::string& detail)
    : Error(ErrorKind::kParseError, "line " + std::to_string(line) + ": " + detail),
      line_(line) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace tfbo
