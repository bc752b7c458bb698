#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace spinid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: configuration values, CSV rows, CLI arguments.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A model law was evaluated outside its admissible region.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Base of all recoverable numerical failures. Callers treat these as
// "retry with a better initial guess".
class SolverError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public SolverError {
 public:
  SingularMatrixError(Eigen::Index pivot_row, const std::string& what)
      : SolverError(what + " (pivot row " + std::to_string(pivot_row) + ")"),
        pivot_row_(pivot_row) {}
  Eigen::Index pivot_row() const { return pivot_row_; }

 private:
  Eigen::Index pivot_row_;
};

class NewtonDivergedError : public SolverError {
 public:
  using SolverError::SolverError;
};

class MeshLimitError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace spinid
