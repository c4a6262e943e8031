#pragma once

#include <stdexcept>
#include <string>

namespace emgdecon {

// Error hierarchy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments, missing prerequisites, violated contracts.
class PreconditionError : public Error {
public:
  using Error::Error;
};

// Instability, NaN, singular formulas.
class NumericError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace emgdecon
