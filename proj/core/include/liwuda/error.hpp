#pragma once

#include <stdexcept>
#include <string>

namespace liwuda {

// Base class for every error raised by the library. Each subclass maps to a
// distinct failure category so callers (notably the CLI) can pick an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not chain or do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An argument is outside the operation's domain (bad label, bad marginal).
class InputError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but degenerate (zero-norm feature, all-zero weights).
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

// Invalid configuration or hyperparameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file did not match its documented format.
class ParseError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Object is not usable in its current state (e.g. non-finite parameters).
class StateError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed (solver did not terminate, NaN encountered).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant; indicates a bug or a misuse of intermediate values.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace liwuda
