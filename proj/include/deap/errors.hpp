#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deap {

// Base of all library errors. Subclasses map onto CLI exit codes:
// ConfigError -> 2, IoError (and parse errors) -> 3, ShapeError/FormatError -> 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Malformed input file content; carries a 1-based line number when known.
struct ParseError : IoError {
  std::size_t line = 0;
  ParseError(const std::string& msg, std::size_t line_no)
      : IoError(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

struct EmptyTraceError : IoError {
  using IoError::IoError;
};

// Dimension mismatch between tensors, or between a checkpoint and the configuration.
struct ShapeError : Error {
  using Error::Error;
};

// Corrupt or unrecognized binary artifact (bad magic, truncation).
struct FormatError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

}  // namespace deap
