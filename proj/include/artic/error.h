#pragma once

#include <stdexcept>
#include <string>

namespace artic {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, score, or graph supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that cannot be analysed (bad samples, failed parses, degenerate
// statistics).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace artic
