#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pipf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent model definition: dimension mismatch, non-SPD prior, bad parameter.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a precondition (window off the grid, length mismatch, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failures caused by the numerics of a run rather than by the inputs.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SimulationBlowup : public NumericalError {
 public:
  SimulationBlowup(std::size_t step, const std::string& what)
      : NumericalError("non-finite state at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class DegenerateWeights : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Riccati or iLQR synthesis produced non-finite values.
class DesignError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An exact reference filter lost its defining property (e.g. covariance not SPD).
class OracleFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pipf
