#pragma once

#include <stdexcept>
#include <string>

namespace scgbin {

/// Invalid argument, configuration value, or input file content.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The SVM dual solver hit its iteration cap before reaching the KKT tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, long iterations, double kkt_violation)
      : std::runtime_error(what), iterations_(iterations), kkt_violation_(kkt_violation) {}

  long iterations() const { return iterations_; }
  double kkt_violation() const { return kkt_violation_; }

 private:
  long iterations_;
  double kkt_violation_;
};

/// A pipeline stage produced nothing to work with (e.g. zero detected events).
class EmptyResultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scgbin
