#pragma once

#include <stdexcept>
#include <string>

namespace climashift {

// Caller violated a documented precondition (bad argument values).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shapes, grids or states that do not line up.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested years fall outside a scenario's coverage.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Experiment or dataset configuration is inconsistent. `field` is a dotted
// path into the config document ("config.scenarios", "config.grid.n_lat").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// On-disk bytes disagree with what the manifest promises.
class IntegrityError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public IoError {
 public:
  using IoError::IoError;
};

// A least-squares design that cannot be solved without regularization.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or intermediate. `epoch` is -1 outside a training loop.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& message, int epoch = -1)
      : std::runtime_error(message), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// A results table is missing a record it needs.
class CompletenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace climashift
