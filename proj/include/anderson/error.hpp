#pragma once

#include <stdexcept>
#include <string>

namespace anderson {

/// Failure categories. The CLI maps these onto its exit codes.
enum class ErrorKind { validation, numerical, budget };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad input: a violated precondition or malformed configuration.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

/// Singular resolvent, diverging recursion, failed residual check.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// A size cap was hit (dense eigensolver, SAW enumeration, vertex count).
class BudgetError : public Error {
 public:
  explicit BudgetError(const std::string& what) : Error(ErrorKind::budget, what) {}
};

}  // namespace anderson
