#pragma once

#include <stdexcept>
#include <string>

namespace graphrank {

/// Base error. `category()` is the machine-parsable tag the CLI prints
/// as `error[<category>]: <message>`.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "internal"; }
};

/// Bad or inconsistent configuration (field paths included in the message).
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "config"; }
};

/// Malformed input file (JSONL record, config document, checkpoint).
class ParseError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "parse"; }
};

/// Structurally valid input violating a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "validation"; }
};

/// Filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "io"; }
};

/// Tensor shape mismatch; message names the offending op.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "shape"; }
};

/// Non-finite value produced by a numeric op.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "numeric"; }
};

/// Requested operation does not apply to the given model kind.
class IncompatibleError : public Error {
 public:
  using Error::Error;
  const char* category() const noexcept override { return "incompatible"; }
};

}  // namespace graphrank
