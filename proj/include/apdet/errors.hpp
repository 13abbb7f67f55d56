#pragma once

#include <stdexcept>
#include <string>

namespace apdet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands belong to different groups or have mismatched shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A configured size, offset or coefficient cap was exceeded.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

/// Pruning losses exceeded the error budget cap.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// A floating point value became NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace apdet
