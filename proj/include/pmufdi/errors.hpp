#pragma once

#include <stdexcept>

namespace pmufdi {

// Malformed input text (CSV/JSONL rows, config files).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes that do not agree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// NaN or Inf offered to a stream, window or queue.
struct NonFiniteError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Points that do not determine a unique circle (collinear, coincident).
struct DegenerateFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameter outside its documented range, unknown preset, bad schedule.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pmufdi
