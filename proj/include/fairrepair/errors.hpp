#pragma once

#include <stdexcept>
#include <string>

namespace fairrepair {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied a value of the wrong shape or outside its domain.
class InputError : public Error {
 public:
  using Error::Error;
};

// A network or problem does not have the structure an operation needs.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. The message carries line/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Loss or bound computation produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairrepair
