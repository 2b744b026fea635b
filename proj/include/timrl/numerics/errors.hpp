#pragma once

#include <stdexcept>
#include <string>

namespace timrl {

/// Operand shapes do not fit the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An argument lies outside the mathematical domain (e.g. a nonpositive variance).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation produced NaN or infinity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace timrl
