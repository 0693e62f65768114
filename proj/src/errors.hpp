#pragma once

#include <stdexcept>
#include <string>

namespace kms {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto one status code, so callers outside C++ see a stable contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Input file or document could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition does not hold (singular gram matrix, zero bandwidth).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A solver could not produce a valid answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace kms
