#pragma once

#include <stdexcept>
#include <string>

namespace mgca {

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/matrix dimensions that do not agree with the configured model.
class ShapeError : public Error {
 public:
  using Error::Error;
};

inline std::string shape_message(const std::string& what, long expected, long actual) {
  return what + ": expected " + std::to_string(expected) + ", got " + std::to_string(actual);
}

}  // namespace mgca
