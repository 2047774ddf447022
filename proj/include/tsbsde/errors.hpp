#pragma once

#include <stdexcept>
#include <string>

namespace tsbsde {

// Argument outside the time scale or another domain restriction.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input: scenario files, literals, inconsistent sizes.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 1 + beta * nu(s) <= 0 somewhere on the range of an exponential.
class AdmissibilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// The implicit per-step equation is not a contraction (L * nu >= 1) or failed to converge.
class StepSizeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace tsbsde
