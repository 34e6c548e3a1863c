#pragma once

#include <stdexcept>
#include <string>

namespace factlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated precondition or invariant on caller-supplied data.
struct ValidationError : Error {
  using Error::Error;
};

struct DuplicateIdError : ValidationError {
  using ValidationError::ValidationError;
};

struct IoError : Error {
  using Error::Error;
};

// Malformed file or document content.
struct ParseError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Network or provider failure that survived the retry policy.
struct TransportError : Error {
  using Error::Error;
};

// The language model could not produce a usable answer.
struct LlmError : Error {
  using Error::Error;
};

struct ScriptExhaustedError : LlmError {
  using LlmError::LlmError;
};

struct EvaluationError : Error {
  using Error::Error;
};

}  // namespace factlab
