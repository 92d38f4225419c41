#pragma once

#include <stdexcept>
#include <string>

namespace gds {

// Base for all library failures. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument or value object violates its documented invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Input files or signal data are malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// An iterative routine produced non-finite values or diverged.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace gds
