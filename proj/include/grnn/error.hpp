#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace grnn {

/// Base of every error thrown by the library. `kind()` is a stable
/// machine-readable tag used by the CLI's JSON error output.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

/// Malformed text input. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse", line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Numerical failure (divergence, non-convergence, non-finite state).
class NumericError : public Error {
public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace grnn
