#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gde {

// Operand shapes do not fit the operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition of the call was violated (non-scalar loss, directed graph
// passed to normalization, empty mask, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Non-finite values or other numerical breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive integration gave up. Carries the number of field evaluations
// spent before giving up.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, long nfe)
      : NumericalError(what), nfe_(nfe) {}
  long nfe() const noexcept { return nfe_; }

 private:
  long nfe_;
};

// Two particles collapsed onto each other.
class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& what, std::size_t i, std::size_t j)
      : NumericalError(what), i_(i), j_(j) {}
  std::size_t first() const noexcept { return i_; }
  std::size_t second() const noexcept { return j_; }

 private:
  std::size_t i_;
  std::size_t j_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gde
