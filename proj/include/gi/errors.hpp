#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A required column is missing or the header is malformed.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A cell could not be parsed as a finite number.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t row, std::string column)
      : Error(message), row_(row), column_(std::move(column)) {}

  /// 1-based data row (the header is row 0).
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Dataset or configuration violates a documented invariant.
class InvalidDataError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

/// Environment means do not span the covariate space.
class IdentifiabilityError : public Error {
 public:
  IdentifiabilityError(const std::string& message, std::vector<double> eigenvalues)
      : Error(message), eigenvalues_(std::move(eigenvalues)) {}

  /// Eigenvalues of the between-environment Gram matrix, descending.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

 private:
  std::vector<double> eigenvalues_;
};

/// Pooled within-environment covariance (or XᵀX) is rank deficient.
class DegenerateCovariatesError : public Error {
 public:
  using Error::Error;
};

class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

class InsufficientTestSampleError : public Error {
 public:
  using Error::Error;
};

/// K lies outside the causal ellipsoid of the test covariance (strict mode).
class EllipsoidViolationError : public Error {
 public:
  EllipsoidViolationError(const std::string& message, double slack)
      : Error(message), slack_(slack) {}

  double slack() const { return slack_; }

 private:
  double slack_;
};

class NotEnoughSourcesError : public Error {
 public:
  using Error::Error;
};

class SelectionInfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace gi
