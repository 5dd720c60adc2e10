#pragma once

#include <stdexcept>
#include <string>

namespace spect {

// Invalid arguments are reported with std::invalid_argument.

/// Malformed or truncated container file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value or hit a degenerate denominator.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration (CLI / JSON config).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spect
