#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tfbo {

enum class ErrorKind {
  kShapeMismatch,
  kNonSpd,
  kEmptyDataset,
  kNonPositiveC,
  kDidNotConverge,
  kNonFiniteIterate,
  kParseError,
  kNonBinaryLabels,
  kConfigError,
  kInsufficientData,
  kMaskMissing,
  kIoError,
  kInvalidArgument,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind lets
/// callers (the CLI in particular) map failures to exit codes without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DidNotConverge : public Error {
 public:
  DidNotConverge(std::size_t iterations, double residual_norm);
  std::size_t iterations() const noexcept { return iterations_; }
  double residual_norm() const noexcept { return residual_norm_; }

 private:
  std::size_t iterations_;
  double residual_norm_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace tfbo
