#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace betasched {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// An iterative method hit its iteration cap without meeting tolerance.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (ordering, range, shape). `line()` is
/// the 1-based input line the value came from, or 0.
class InvariantError : public std::invalid_argument {
public:
  explicit InvariantError(const std::string &what)
      : std::invalid_argument(what), line_(0) {}
  InvariantError(std::size_t line, const std::string &what)
      : std::invalid_argument("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A request cannot be satisfied, e.g. more steps than the horizon holds.
class InfeasibleError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Grid or array dimensions do not satisfy an operation's requirements.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input document. `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string &what)
      : std::runtime_error(line == 0 ? what
                                     : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// File system failure while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace betasched
