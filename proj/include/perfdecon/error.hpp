#pragma once

#include <stdexcept>
#include <string>

namespace perfdecon {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The inputs are well-formed but the computation is ill-posed: a spectral
// division by a vanishing mode, an undecayed tail, a degenerate range.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Malformed or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File system failure or unparseable data file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace perfdecon
