#pragma once

#include <stdexcept>
#include <string>

namespace refergate {

// Input-side failures. The CLI maps all of these to exit code 2;
// anything else that escapes is a runtime failure (exit code 1).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally broken input (bad row, wrong field count, unparsable value).
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// Well-formed input violating a value constraint (score out of range, ...).
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

// File-level shape problems, e.g. heterogeneous mc column counts.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace refergate
