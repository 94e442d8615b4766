#pragma once

#include <stdexcept>
#include <string>

namespace riskx {

/// Precondition or argument violation. The CLI maps this to exit code 2.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Numeric failure: non-convergence, non-finite intermediate, estimation
/// impossible. The CLI maps this to exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// MLE exists only on the model boundary or is numerically singular.
class DegenerateEstimate : public NumericError {
 public:
  explicit DegenerateEstimate(const std::string& what) : NumericError(what) {}
};

/// The requested divergence is undefined for the given inputs (e.g. the
/// blended precision matrix of the Gaussian closed form is not positive
/// definite).
class DivergenceUndefined : public NumericError {
 public:
  explicit DivergenceUndefined(const std::string& what) : NumericError(what) {}
};

}  // namespace riskx
