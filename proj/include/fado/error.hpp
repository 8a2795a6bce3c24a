#pragma once

#include <stdexcept>
#include <string>

namespace fado {

// Thrown for malformed inputs: schema violations, unresolved names, broken
// invariants in loaded files. Expected search outcomes (a function that does
// not fit, an infeasible route) are reported through return values instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when no initial floorplan can be produced.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace fado
