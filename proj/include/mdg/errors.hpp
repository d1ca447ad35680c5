#pragma once

#include <stdexcept>

namespace mdg {

/// Arguments outside the model's domain (negative powers, p >= 1, a profile
/// with no effective mining power, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A specialised solver was called on an instance it does not handle.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A result violated a property that holds for every valid game.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdg
