#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bbm {

// Error categories map onto CLI exit codes: configuration/domain errors are
// validation failures (1), numerical/accuracy/resource errors are numerical
// failures (2).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double previous = 0.0, double last = 0.0)
      : std::runtime_error(what), previous_(previous), last_(last) {}

  /// The last two estimates produced before giving up.
  double previous_estimate() const { return previous_; }
  double last_estimate() const { return last_; }

 private:
  double previous_;
  double last_;
};

class AccuracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, double suggestion)
      : std::runtime_error(what), suggestion_(suggestion) {}

  /// A parameter value that would fit the budget (e.g. the largest feasible horizon).
  double suggestion() const { return suggestion_; }

 private:
  double suggestion_;
};

}  // namespace bbm
