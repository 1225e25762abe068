#pragma once

#include <stdexcept>
#include <string>

namespace depthwatch {

// Bad or inconsistent input data (CSV contents, label/reference mismatches).
// The CLI maps this to exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (singular covariance, degenerate fits, unsupported
// dimension). The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace depthwatch
