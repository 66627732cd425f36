#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmdground {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed spec document. `line` is 0 when the position is unknown.
class SyntaxError : public Error {
 public:
  explicit SyntaxError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed document that violates an AppSpec invariant. `aid` is 0 when
/// the problem is not tied to a single ASC.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, int aid = 0)
      : Error(aid ? "AID " + std::to_string(aid) + ": " + what : what),
        aid_(aid) {}
  int aid() const noexcept { return aid_; }

 private:
  int aid_;
};

class EmptyCommand : public Error {
 public:
  EmptyCommand() : Error("empty command") {}
};

// Environment errors.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};
class OutOfBounds : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};
class CellOccupied : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};
class UnknownId : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};
class DuplicateName : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};
class AmbiguousReference : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};
class UnknownApi : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};
class BadArgument : public EnvironmentError {
 public:
  using EnvironmentError::EnvironmentError;
};

// Grounding-internal reduction failures; never escape ground().
class UtilityExecutionError : public Error {
 public:
  using Error::Error;
};
class EmptyResult : public Error {
 public:
  EmptyResult() : Error("utility returned an empty result") {}
};

// Learner protocol errors.
class InvalidState : public Error {
 public:
  using Error::Error;
};
class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

// Service errors.
class UnknownSpec : public Error {
 public:
  using Error::Error;
};
class UnknownSession : public Error {
 public:
  using Error::Error;
};

}  // namespace cmdground
