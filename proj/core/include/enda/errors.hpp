#pragma once

#include <stdexcept>
#include <string>

namespace enda {

// Common base so a replicate driver can catch every library failure at once.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (logit, taper, ...).
struct DomainError : Error {
  using Error::Error;
};

// A documented precondition was violated (uncentered anomalies, wrong layout).
struct PreconditionError : Error {
  using Error::Error;
};

// Observation-error covariance is not symmetric positive definite.
struct InvalidCovarianceError : Error {
  using Error::Error;
};

// Matrix numerically rank-deficient where a full-rank SPD input is required.
struct NumericalRankError : Error {
  using Error::Error;
};

// Transport marginals are inconsistent or a solver produced an infeasible plan.
struct FeasibilityError : Error {
  using Error::Error;
};

// An iterative solver hit its iteration budget before reaching tolerance.
struct IterationLimitError : Error {
  using Error::Error;
};

// Experiment configuration file is malformed or self-inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

// File input/output failure.
struct IoError : Error {
  using Error::Error;
};

}  // namespace enda
