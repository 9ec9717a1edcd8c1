#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace substruct {

// Contract violation on an argument: bad dimensions, unknown labels,
// wrong model kinds.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A matrix that must be inverted is singular or too ill-conditioned.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double rcond)
      : std::runtime_error(what), rcond_(rcond) {}

  // Reciprocal condition estimate of the offending matrix (0 when exactly
  // singular).
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

// (j*w*I - A) was singular at one or more grid lines.
class SingularFrequencyError : public std::runtime_error {
 public:
  SingularFrequencyError(const std::string& what, std::vector<std::size_t> lines)
      : std::runtime_error(what), lines_(std::move(lines)) {}

  const std::vector<std::size_t>& lines() const noexcept { return lines_; }

 private:
  std::vector<std::size_t> lines_;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model / config file could not be parsed or violates a type invariant.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}

  // 1-based line of the failure, 0 when not applicable.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace substruct
