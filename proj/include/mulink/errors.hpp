#pragma once

#include <stdexcept>
#include <string>

namespace mulink {

// Configuration problems (bad file, missing table, schema mismatch).
// The CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown (singular covariance, non-finite inputs).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problem size beyond a configured enumeration cap.
struct UnsupportedSizeError : std::runtime_error {
  explicit UnsupportedSizeError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mulink
