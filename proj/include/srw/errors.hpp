#pragma once

#include <stdexcept>
#include <string>

namespace srw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or violated precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Problem too large for the requested solver.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Integration or post-processing produced an unphysical or unreliable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace srw
