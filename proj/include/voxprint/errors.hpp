#pragma once

#include <stdexcept>
#include <string>

namespace voxprint {

/// Invalid or inconsistent configuration: unknown recipe, grid mismatch,
/// LUT built for a different pigment set.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed, truncated or invariant-violating file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace voxprint
