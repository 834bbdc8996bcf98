#pragma once

#include <stdexcept>
#include <string>

namespace lmgheom {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: sizes, temperatures, config files, out-of-range arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Numerical failures raised while a computation is running.
class SolverError : public Error {
 public:
  using Error::Error;
};

class DegeneracyError : public SolverError {
 public:
  DegeneracyError(const std::string& what, double gap, double s = -1.0)
      : SolverError(what), gap_(gap), s_(s) {}
  double gap() const { return gap_; }
  /// Path parameter at which the degeneracy was found, or -1 when unknown.
  double s() const { return s_; }

 private:
  double gap_;
  double s_;
};

class AccuracyError : public SolverError {
 public:
  using SolverError::SolverError;
};

class StiffnessError : public SolverError {
 public:
  StiffnessError(const std::string& what, double t) : SolverError(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

class ExpansionError : public SolverError {
 public:
  using SolverError::SolverError;
};

class FitError : public SolverError {
 public:
  using SolverError::SolverError;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace lmgheom
