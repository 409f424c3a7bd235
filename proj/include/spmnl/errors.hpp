#pragma once

#include <stdexcept>
#include <string>

namespace spmnl {

/// Bad arguments or inputs that violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values where finite ones are required.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Singular systems, failed factorizations, undefined diagnostics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent or incomplete run configuration (CLI level).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spmnl
