#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace optneq {

/// Dense matrix with one agent per row (stacked decision and tracker matrices).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a documented precondition or assumption.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A requested edge count does not fit into the node set.
class CapacityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// An iterative numerical routine failed to reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Iterates became non-finite.
class DivergenceError : public Error {
 public:
  DivergenceError(long iteration, double max_abs)
      : Error("divergence at iteration " + std::to_string(iteration) +
              " (max |entry| = " + std::to_string(max_abs) + ")"),
        iteration_(iteration), max_abs_(max_abs) {}
  long iteration() const { return iteration_; }
  double max_abs() const { return max_abs_; }

 private:
  long iteration_;
  double max_abs_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace optneq
