#pragma once

#include <stdexcept>
#include <string>

namespace netdyn {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of weights, inputs or series do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message names the offending line or field.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input is well-formed but the requested computation is undefined on it
// (zero-variance series, zero initial distance, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Invalid parameter combination passed by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace netdyn
