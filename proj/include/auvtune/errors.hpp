#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace auvtune {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The denominator leading coefficient vanished (A3 == 0).
class DegeneratePlantError : public Error {
 public:
  using Error::Error;
};

/// A transfer function whose numerator degree is not below the denominator degree.
class ImproperTransferFunctionError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class NonFiniteInputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value, or a metric precondition such as a zero step amplitude.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Fitness requested before normalization baselines were fixed.
class UnsetBaselineError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, double value)
      : Error("simulation diverged at step " + std::to_string(step) + " (|z| = " +
              std::to_string(value) + ")"),
        step_(step) {}

  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace auvtune
