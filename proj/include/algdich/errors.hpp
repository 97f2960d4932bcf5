#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace algdich {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A user-supplied function produced a non-finite or out-of-domain value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator failed (step-size underflow, non-finite state, step budget).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature could not meet its tolerance within the panel budget.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// A time request falls outside the declared working interval.
class IntervalError : public Error {
 public:
  using Error::Error;
};

/// A regression had a degenerate design.
class FitError : public Error {
 public:
  using Error::Error;
};

/// A theorem hypothesis (gate) is violated.
class GateError : public Error {
 public:
  GateError(std::string gate, const std::string& what) : Error(what), gate_(std::move(gate)) {}
  const std::string& gate() const noexcept { return gate_; }

 private:
  std::string gate_;
};

/// A fixed-point iteration exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_delta)
      : Error(what), last_delta_(last_delta) {}
  double last_delta() const noexcept { return last_delta_; }

 private:
  double last_delta_;
};

/// Malformed run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in the expression language, with a 1-based source location.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(message + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        message_(message),
        line_(line),
        column_(column) {}
  /// The message without the location.
  const std::string& message() const noexcept { return message_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string message_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace algdich
