#pragma once

#include <stdexcept>
#include <string>

namespace damplqr {

// Collected data fail an excitation rank condition, or a regression matrix
// is numerically rank-deficient. CLI exit code 2.
class RankError : public std::runtime_error {
 public:
  explicit RankError(const std::string& what) : std::runtime_error(what) {}
};

// An iteration hit its cap or a solver failed to converge. CLI exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

// Malformed configuration, file, or schema. CLI exit code 4.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace damplqr
