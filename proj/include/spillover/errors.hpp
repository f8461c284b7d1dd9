#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spillover {

// Invalid argument to a generator or estimator (odd degree, exhausted
// support, saturation that leaves an arm without controls, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. `line` is 1-based; 0 when the error is not tied to a
// single line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Estimation inputs are inconsistent, e.g. a unit realized in a condition whose
// estimated probability is zero, or a variance asked for without joint tables.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spillover
