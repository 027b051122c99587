#pragma once

#include <stdexcept>
#include <string>

namespace trajcd {

// Base class for all library failures. The category decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or out-of-contract input (bad degrees, bad files, bad samples).
class InputError : public Error {
 public:
  using Error::Error;
};

// Singular matrices, loss of positive semidefiniteness, missing factorization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A probe or file does not fit a model (harmonic truncation, domain, basis size).
class MismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace trajcd
