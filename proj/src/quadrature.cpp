#include "riskx/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "riskx/errors.hpp"

namespace riskx {

GaussLegendreRule::GaussLegendreRule(int points) {
  if (points < 2) throw InvalidInput("GaussLegendreRule: need at least 2 points");
  nodes.resize(points);
  weights.resize(points);
  const int half = (points + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Legendre recurrence: (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < points; ++k) {
        const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = points * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[points - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[points - 1 - i] = w;
  }
}

namespace {

const GaussLegendreRule& panel_rule() {
  static const GaussLegendreRule rule(20);
  return rule;
}

double composite(const std::function<double(double)>& f, double a, double b,
                 int panels) {
  const GaussLegendreRule& rule = panel_rule();
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      s += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    }
    total += 0.5 * h * s;
  }
  return total;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, int max_doublings) {
  if (!(a < b)) throw InvalidInput("integrate: requires a < b");
  int panels = 8;
  double prev = composite(f, a, b, panels);
  double last_delta = 0.0;
  for (int d = 0; d < max_doublings; ++d) {
    panels *= 2;
    const double cur = composite(f, a, b, panels);
    const double scale = std::max(1.0, std::abs(cur));
    last_delta = std::abs(cur - prev);
    if (last_delta < rel_tol * scale) return cur;
    prev = cur;
  }
  std::ostringstream msg;
  msg << "integrate: no convergence after " << panels << " panels on [" << a
      << ", " << b << "], last delta " << last_delta << ", rel_tol " << rel_tol;
  throw NumericError(msg.str());
}

}  // namespace riskx
