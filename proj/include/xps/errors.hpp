#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace xps {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Conditioning on an outcome that has zero probability under the model.
class ImpossibleEventError : public Error {
 public:
  using Error::Error;
};

/// The model has a pole at the requested point (e.g. resonant signal).
class SingularityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Measurement windows that do not fit inside the available series.
class LayoutError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Collects every offending key of a configuration document.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string out = "invalid configuration:";
    for (const auto& s : p) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> problems_;
};

}  // namespace xps
