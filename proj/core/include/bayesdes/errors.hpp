#pragma once

#include <stdexcept>
#include <string>

namespace bayesdes {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A constraint generator returned no admissible coordinate values.
class ConstraintExhausted : public Error {
 public:
  using Error::Error;
};

// A covariance or information matrix could not be factorized.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Fisher information is singular where an inverse is required.
class SingularInformation : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// A utility evaluator produced NaN or infinite draws.
class NonFinite : public Error {
 public:
  using Error::Error;
};

}  // namespace bayesdes
