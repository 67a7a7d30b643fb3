#pragma once

#include <stdexcept>
#include <string>

namespace ssep {

/// Argument outside the domain of an operation (bad site index, negative time, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Problem size beyond what an exact computation supports.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Malformed user-supplied data (parameters, laws, configuration files).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for (p, q) in {(0,0), (1,1)}, where the chain is reducible.
class ReducibleModelError : public std::runtime_error {
 public:
  ReducibleModelError() : std::runtime_error("no unique stationary law") {}
};

}  // namespace ssep
