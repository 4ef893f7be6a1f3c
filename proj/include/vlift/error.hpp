#pragma once

#include <stdexcept>
#include <string>

namespace vlift {

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Partial-function misuse during numeric evaluation: log of a non-positive
/// value, sqrt of a negative value, division by zero.
class DomainError : public Error {
  using Error::Error;
};

/// Raised by the kernel interpreters (out-of-bounds access, racing threads,
/// type errors in kernel expressions).
class ExecutionError : public Error {
  using Error::Error;
};

}  // namespace vlift
