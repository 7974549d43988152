#pragma once

#include <stdexcept>
#include <string>

namespace rbmc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector or matrix sizes disagree with the model they are used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class UnknownTerminal : public Error {
 public:
  explicit UnknownTerminal(const std::string& name)
      : Error("unknown terminal '" + name + "'") {}
};

// Precondition on a scalar argument or configuration value failed.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Enumeration or dense construction refused because the state space is too big.
class TooLarge : public Error {
 public:
  using Error::Error;
};

}  // namespace rbmc
