// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <stdexcept>
#include <string>

namespace spatfda {

// Malformed or out-of-domain user input (bad CSV rows, non-monotone times,
// evaluation points outside the basis interval). CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (degenerate basis interval, bad sampler settings,
// missing paths, unordered thresholds). CLI exit code 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (Cholesky breakdown after max jitter, NaN propagation,
// non-positive variance draws). CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spatfda
