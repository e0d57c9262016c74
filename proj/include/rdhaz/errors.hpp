#pragma once

#include <stdexcept>
#include <string>

namespace rdhaz {

// Invalid user input: bad flags, malformed files, out-of-range parameters.
// CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: quadrature non-convergence, degenerate pilot fits.
// CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double achieved = 0.0)
      : std::runtime_error(what), achieved_tolerance(achieved) {}
  double achieved_tolerance;
};

}  // namespace rdhaz
