#pragma once

#include <stdexcept>
#include <string>

namespace cuped {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// (sigma, tau, rho) does not form a positive semidefinite correlation matrix.
class InfeasibleStructure : public Error {
 public:
  InfeasibleStructure(const std::string& what, double determinant, double min_eigenvalue)
      : Error(what), determinant_(determinant), min_eigenvalue_(min_eigenvalue) {}
  explicit InfeasibleStructure(const std::string& what)
      : InfeasibleStructure(what, 0.0, 0.0) {}

  double determinant() const noexcept { return determinant_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double determinant_;
  double min_eigenvalue_;
};

/// A closed-form quantity has a vanishing denominator (|rho| = 1, sigma^2 = 1, ...).
class DegenerateStructure : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment data: too few units per arm, ragged covariates, non-finite values.
class InvalidFrame : public Error {
 public:
  using Error::Error;
};

/// Base for failures raised while fitting an estimator on a valid frame.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

class ZeroVarianceCovariate : public EstimatorError {
 public:
  using EstimatorError::EstimatorError;
};

class CollinearCovariates : public EstimatorError {
 public:
  using EstimatorError::EstimatorError;
};

class FoldTooSmall : public EstimatorError {
 public:
  using EstimatorError::EstimatorError;
};

/// An estimator failed inside a Monte Carlo replication.
class ReplicationFailure : public EstimatorError {
 public:
  ReplicationFailure(const std::string& what, long long replication_index)
      : EstimatorError(what), replication_index_(replication_index) {}

  long long replication_index() const noexcept { return replication_index_; }

 private:
  long long replication_index_;
};

}  // namespace cuped
