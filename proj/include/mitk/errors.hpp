#pragma once

#include <stdexcept>
#include <string>

namespace mitk {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A probability vector, channel row, or joint table violates its invariants.
class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied arguments are malformed (bad axis sets, empty grids, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// p(a,b) > 0 while p(a) = 0 or p(b) = 0: the table is corrupt.
class ZeroMarginal : public Error {
 public:
  using Error::Error;
};

class AlphabetMismatch : public Error {
 public:
  using Error::Error;
};

class RateOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateChannel : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// An estimator could not reach the caller's error cap.
class BudgetTooSmall : public Error {
 public:
  using Error::Error;
};

/// A Poisson series needs more terms than TruncationPolicy::hard_cap allows.
class HardCapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace mitk
