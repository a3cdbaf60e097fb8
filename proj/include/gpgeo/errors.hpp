#pragma once

#include <stdexcept>
#include <string>

namespace gpgeo {

/// Argument outside the mathematical domain of an operation
/// (negative lag, nonpositive range, probability outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Locations, targets or data vectors whose shapes disagree.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unknown configuration content.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or malformed input file.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Valid inputs for which the numerics broke down.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cholesky factorization of a correlation matrix failed; usually near-duplicate
/// locations or a range far outside the scale of the design.
class FactorizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The data carry no information for the profile likelihood (z == 0).
class DegenerateObservations : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace gpgeo
