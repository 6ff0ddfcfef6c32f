#pragma once

#include <stdexcept>
#include <string>

namespace iwdg {

// Enumeration or sampling budget would be exceeded (CLI exit code 2).
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A spin outside the box was read under free boundary conditions.
class BoundaryReadError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The requested quantity does not exist for these inputs (e.g. Q with a
// vanishing sub-expectation, a non-decaying covariance fit).
class UndefinedQuantityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InsufficientSamplesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace iwdg
