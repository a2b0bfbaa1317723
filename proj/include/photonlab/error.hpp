#pragma once

#include <stdexcept>
#include <string>

namespace photonlab {

// Argument outside the mathematical domain of a conversion.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid simulation, instrument or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called with input of the wrong shape (e.g. channel count).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An estimator could not produce a meaningful answer from its data.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Emitted by the least-squares engine when the Jacobian is singular.
class RankDeficiencyError : public EstimationError {
 public:
  RankDeficiencyError(const std::string& what, std::string direction)
      : EstimationError(what), direction_(std::move(direction)) {}
  const std::string& direction() const noexcept { return direction_; }

 private:
  std::string direction_;
};

// Model-level contradiction between measured quantities.
class InconsistencyError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File parsed but does not hold the expected product.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace photonlab
