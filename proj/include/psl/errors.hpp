#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace psl {

// Malformed arguments to a library call (dimension mismatch, bad index, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A configuration that violates one or more documented constraints. Carries
// every violation found, each formatted as "<field path>: <constraint>".
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  explicit ValidationError(const std::string& violation)
      : ValidationError(std::vector<std::string>{violation}) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ConnectivityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TopologyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Iterative numerical procedure failed (non-convergence, quadrature depth).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psl
