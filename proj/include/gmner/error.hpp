#pragma once

#include <stdexcept>
#include <string>

namespace gmner {

// Base of every error the toolkit throws on purpose. The CLI maps each
// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input data (boxes, records, files).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or conflicting options.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A record cannot be written in canonical form.
class SerializationError : public InputError {
 public:
  using InputError::InputError;
};

// An internal invariant did not hold. Indicates a bug, never bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace gmner
