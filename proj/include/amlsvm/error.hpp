#pragma once

#include <stdexcept>
#include <string>

namespace amlsvm {

/// Malformed or unusable input data (parse failures, single-class files, bad dimensions).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration values outside their documented ranges.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure while training a model (single-class training set, every NUD candidate failing).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amlsvm
