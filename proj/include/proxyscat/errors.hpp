#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace proxyscat {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

class GeometryError : public ConfigError {
 public:
  using ConfigError::ConfigError;
  const char* kind() const noexcept override { return "geometry_error"; }
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, long index) : Error(what), index_(index) {}
  long index() const noexcept { return index_; }
  const char* kind() const noexcept override { return "singular_matrix"; }

 private:
  long index_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }
  const char* kind() const noexcept override { return "convergence_error"; }

 private:
  std::vector<double> history_;
};

}  // namespace proxyscat
