#pragma once

#include <stdexcept>
#include <string>

namespace wedgewar {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A requested wedge angle cannot be produced by any finite shooting parameter.
class OutOfRangeError : public DomainError {
 public:
  OutOfRangeError(const std::string& what, double critical)
      : DomainError(what), critical_(critical) {}
  double critical() const { return critical_; }

 private:
  double critical_;
};

class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

// Quadrature or interpolation could not meet its tolerance.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

// Square-root start of the profile integration disagrees with its Taylor seed.
class DegenerateStartError : public Error {
 public:
  using Error::Error;
};

// The infinity Laplacian is undefined where the gradient vanishes.
class CriticalPointError : public DomainError {
 public:
  using DomainError::DomainError;
};

class StrategyViolationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wedgewar
