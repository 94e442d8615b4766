#pragma once

#include <functional>
#include <vector>

namespace riskx {

/// Gauss-Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre polynomial (accurate to ~1e-15).
struct GaussLegendreRule {
  explicit GaussLegendreRule(int points);
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Composite 20-point Gauss-Legendre integral of f over [a, b]. The panel
/// count doubles until two successive composites agree within rel_tol
/// relative to max(1, |I|); throws NumericError if max_doublings refinements
/// are exhausted first.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12, int max_doublings = 12);

}  // namespace riskx
