#pragma once

#include <stdexcept>
#include <string>

namespace dgl {

// Base error for all library failures.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Violated precondition or resource guard (depth caps, enumeration limits,
// step-size restriction, frontier ordering).
struct GuardError : Error {
  explicit GuardError(const std::string& what) : Error(what) {}
};

// Numerical failure (bracket expansion exhausted, non-finite values).
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error(what) {}
};

// Rejected experiment configuration; the message aggregates every violation
// found, one per line.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace dgl
