#pragma once

#include <stdexcept>
#include <string>

namespace actforge {

/// Base of every error thrown by the library. The CLI maps subclasses to
/// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration: unknown task ids, infeasible tasks,
/// invalid hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The scripted expert could not produce an action for the given state.
class PlanningError : public Error {
 public:
  using Error::Error;
};

/// Violated call precondition (e.g. equal critic candidates).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or records that fail validation on load.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A file line that could not be parsed. Carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite logits, gradients or parameters.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace actforge
