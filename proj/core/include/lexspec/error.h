#pragma once

#include <stdexcept>
#include <string>

namespace lexspec {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented contract (bad config, schema violation,
// malformed record). The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written. The CLI maps this to exit code 1.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lexspec
