#pragma once

#include <stdexcept>
#include <string>

namespace sosfem {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input in an experiment configuration or on the command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Factorization breakdown, non-finite data, or a failed size guard.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace sosfem
