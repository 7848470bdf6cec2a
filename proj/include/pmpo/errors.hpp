#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pmpo {

// Malformed arguments: wrong dimension, token out of range, bad hyperparameter.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Enumeration or table would exceed the supported size.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Inputs are well-formed but the quantity is undefined (e.g. a zero normalizer).
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised by the optimizer when a gradient or parameter stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Carries every violation found while validating an experiment config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace pmpo
