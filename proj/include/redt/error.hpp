#pragma once

#include <stdexcept>
#include <string>

namespace redt {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument or configuration value violates a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data is missing, malformed, or unusable (files, tables, datasets).
class DataError : public Error {
 public:
  using Error::Error;
};

// An exact integer result does not fit the return type.
class OverflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace redt
