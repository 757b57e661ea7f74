#pragma once

#include <stdexcept>
#include <string>

namespace cgp {

// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed topology or inconsistent shapes. Maps to exit code 2 in the CLI.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration (flags, generator settings). Exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File does not match the expected schema. Exit code 2.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Factorization or solve failed beyond recovery. Exit code 1.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cgp
