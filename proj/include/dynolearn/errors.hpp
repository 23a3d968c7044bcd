#pragma once

#include <stdexcept>
#include <string>

namespace dynolearn {

// Exception families. The CLI maps each to a fixed process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (shape mismatch, asymmetric input...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// A domain object would violate its invariants (unstable A, m above cap...).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// System/oracle combination that has no meaning (Kalman on Lorenz).
class IncompatiblePairing : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynolearn
