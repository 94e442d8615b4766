#include "riskx/models/two_normal_mixture.hpp"

#include <cmath>
#include <numbers>

#include "riskx/divergence.hpp"
#include "riskx/quadrature.hpp"

namespace riskx {

namespace {

constexpr double kEdge = 1e-8;  // search interval is [kEdge, 1 - kEdge]

/// log g1(x) - log g0(x) for the two unit-separated components.
inline double log_ratio(double x, double s2) { return (2.0 * x - 1.0) / (2.0 * s2); }

/// t(theta) = (r - 1) / (1 + theta (r - 1)) with r = g1/g0, computed from
/// whichever side keeps exp() bounded.
inline double score_factor_impl(double x, double theta, double s2) {
  const double lr = log_ratio(x, s2);
  if (lr >= 0.0) {
    const double q = std::exp(-lr);  // g0/g1 in (0, 1]
    return (1.0 - q) / (q + theta * (1.0 - q));
  }
  const double r = std::exp(lr);  // in (0, 1)
  return (r - 1.0) / (1.0 + theta * (r - 1.0));
}

inline double log_density_impl(double x, double theta, double s2) {
  const double lr = log_ratio(x, s2);
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi * s2);
  if (lr >= 0.0) {
    // log f = log g1 + log(theta + (1-theta) g0/g1)
    const double q = std::exp(-lr);
    return norm - (x - 1.0) * (x - 1.0) / (2.0 * s2) +
           std::log(theta + (1.0 - theta) * q);
  }
  const double r = std::exp(lr);
  return norm - x * x / (2.0 * s2) + std::log1p(theta * (r - 1.0));
}

}  // namespace

TwoNormalMixtureModel::TwoNormalMixtureModel(double sigma2) : s2_(sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidInput("mixture: sigma2 must be positive");
  }
}

bool TwoNormalMixtureModel::in_domain(const ParamPoint& theta) const {
  return theta.dim() == 1 && theta.finite() && theta.coords[0] > 0.0 &&
         theta.coords[0] < 1.0;
}

double TwoNormalMixtureModel::score_factor(double x, double theta1) const {
  return score_factor_impl(x, theta1, s2_);
}

double TwoNormalMixtureModel::log_density(const double* x, const ParamPoint& theta) const {
  require_point(theta);
  return log_density_impl(*x, theta.coords[0], s2_);
}

void TwoNormalMixtureModel::log_derivs(const double* x, const ParamPoint& theta,
                                       int order, LogDerivs& out) const {
  require_point(theta);
  out.resize(1, order);
  const double t = score_factor_impl(*x, theta.coords[0], s2_);
  out.d1[0] = t;
  out.d2[0] = -t * t;
  if (order >= 3) out.d3[0] = 2.0 * t * t * t;
  if (order >= 4) out.d4[0] = -6.0 * t * t * t * t;
}

void TwoNormalMixtureModel::sample(const ParamPoint& theta, std::int64_t count,
                                   RngStream& rng, ObservationBatch& out) const {
  require_point(theta);
  const double t1 = theta.coords[0];
  const double sd = std::sqrt(s2_);
  out.count = count;
  out.obs_dim = 1;
  out.data.resize(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const double mean = rng.uniform() < t1 ? 1.0 : 0.0;
    out.data[i] = mean + sd * rng.normal();
  }
}

MleResult mixture_mle(const std::vector<double>& samples, double sigma2) {
  if (!(sigma2 > 0.0)) throw InvalidInput("mixture_mle: sigma2 must be positive");
  if (samples.empty()) throw InvalidInput("mixture_mle: empty sample");

  // Informative observations are those where the two components actually
  // differ; h(x) = 0 exactly at x = 1/2 and numerically near it.
  bool informative = false;
  for (double x : samples) {
    if (std::abs(log_ratio(x, sigma2)) > 1e-12) {
      informative = true;
      break;
    }
  }
  MleResult r;
  r.point.coords = {0.5};
  if (!informative) {
    r.flat_likelihood = true;
    return r;
  }

  const auto dlog = [&](double theta) {
    double s = 0.0;
    for (double x : samples) s += score_factor_impl(x, theta, sigma2);
    return s;
  };
  const auto loglik = [&](double theta) {
    double s = 0.0;
    for (double x : samples) s += log_density_impl(x, theta, sigma2);
    return s;
  };

  const double lo = kEdge, hi = 1.0 - kEdge;
  // The likelihood is concave, so the derivative sign at the edges decides
  // boundary solutions outright.
  if (dlog(lo) <= 0.0) {
    r.point.coords = {lo};
    r.boundary = true;
    return r;
  }
  if (dlog(hi) >= 0.0) {
    r.point.coords = {hi};
    r.boundary = true;
    return r;
  }

  // Golden-section bracketing down to 1e-4, then Newton on the score.
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = loglik(c), fd = loglik(d);
  while (b - a > 1e-4) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = loglik(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = loglik(d);
    }
  }
  double theta = 0.5 * (a + b);
  for (int iter = 0; iter < 60; ++iter) {
    double d1 = 0.0, d2 = 0.0;
    for (double x : samples) {
      const double t = score_factor_impl(x, theta, sigma2);
      d1 += t;
      d2 -= t * t;
    }
    if (d2 == 0.0) break;
    double next = theta - d1 / d2;
    next = std::min(hi, std::max(lo, next));
    const double step = std::abs(next - theta);
    theta = next;
    if (step < 1e-10) break;
  }
  r.point.coords = {theta};
  return r;
}

MleResult TwoNormalMixtureModel::mle(const ObservationBatch& obs) const {
  return mixture_mle(obs.data, s2_);
}

FisherMatrix TwoNormalMixtureModel::fisher(const ParamPoint& theta) const {
  require_point(theta);
  if (!in_domain(theta)) throw InvalidInput("mixture: theta1 not in (0,1)");
  const double t1 = theta.coords[0];
  const double sd = std::sqrt(s2_);
  const double lo = -10.0 * sd - 1.0, hi = 10.0 * sd + 2.0;
  // g = E[(h/f)^2] = int h^2 / f dx.
  const double g = integrate(
      [&](double x) {
        const double t = score_factor_impl(x, t1, s2_);
        return t * t * std::exp(log_density_impl(x, t1, s2_));
      },
      lo, hi);
  FisherMatrix f;
  f.dim = 1;
  f.g = {g};
  f.g_inv = {1.0 / g};
  return f;
}

double TwoNormalMixtureModel::divergence(const ParamPoint& theta1,
                                         const ParamPoint& theta2,
                                         double alpha) const {
  return alpha_divergence_mixture(theta1.coords[0], theta2.coords[0], s2_, alpha);
}

}  // namespace riskx
