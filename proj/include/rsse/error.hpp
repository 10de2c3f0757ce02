#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsse {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value (k < 1, gamma <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Finite population too small for the requested design.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// A kernel density estimate vanished where a logarithm was required.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t offending)
      : Error(what), offending_(offending) {}
  std::size_t offending_points() const noexcept { return offending_; }

 private:
  std::size_t offending_;
};

/// Quadrature or root-finding failed to meet its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete input file.
class IngestionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace rsse
