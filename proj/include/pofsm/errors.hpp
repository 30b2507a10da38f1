#pragma once

#include <stdexcept>
#include <string>

namespace pofsm {

// Configuration and architecture problems: bad flags, incompatible shapes,
// codebook/network mismatches. The CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or missing input data: unreadable/corrupt files, labels outside the
// vocabulary. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse, e.g. backward() without a preceding forward().
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace pofsm
