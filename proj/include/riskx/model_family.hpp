#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "riskx/errors.hpp"
#include "riskx/rng.hpp"

namespace riskx {

/// A point theta = (theta^1, ..., theta^p) in the parameter space.
struct ParamPoint {
  std::vector<double> coords;

  int dim() const { return static_cast<int>(coords.size()); }
  bool finite() const {
    for (double c : coords) {
      if (!std::isfinite(c)) return false;
    }
    return true;
  }
};

/// n observations of obs_dim reals each, row-major.
struct ObservationBatch {
  std::int64_t count = 0;
  int obs_dim = 0;
  std::vector<double> data;

  const double* row(std::int64_t i) const { return data.data() + i * obs_dim; }
  double* row(std::int64_t i) { return data.data() + i * obs_dim; }
};

/// Dense symmetric log-likelihood derivative tensors at one observation:
/// d1[i] = l_i, d2[i*p+j] = l_{ij}, d3 and d4 likewise row-major.
struct LogDerivs {
  int dim = 0;
  int order = 0;
  std::vector<double> d1;
  std::vector<double> d2;
  std::vector<double> d3;
  std::vector<double> d4;

  void resize(int p, int k) {
    dim = p;
    order = k;
    d1.assign(p, 0.0);
    d2.assign(static_cast<std::size_t>(p) * p, 0.0);
    d3.assign(k >= 3 ? static_cast<std::size_t>(p) * p * p : 0, 0.0);
    d4.assign(k >= 4 ? static_cast<std::size_t>(p) * p * p * p : 0, 0.0);
  }
};

struct MleResult {
  ParamPoint point;
  bool boundary = false;         // estimate clamped to the closure of the domain
  bool flat_likelihood = false;  // likelihood constant in theta for this sample
};

/// Fisher information metric g_ij and its inverse g^{ij}, dense row-major.
struct FisherMatrix {
  int dim = 0;
  std::vector<double> g;
  std::vector<double> g_inv;
};

/// A smooth parametric family. Implementations are immutable after
/// construction and safe to share across threads; sampling is a pure
/// function of (theta, count, stream).
class ModelFamily {
 public:
  virtual ~ModelFamily() = default;

  virtual std::string name() const = 0;
  virtual int param_dim() const = 0;
  virtual int obs_dim() const = 0;

  /// True when theta lies in the open interior of the parameter space.
  virtual bool in_domain(const ParamPoint& theta) const = 0;

  virtual double log_density(const double* x, const ParamPoint& theta) const = 0;

  /// Fills derivative tensors of log f at x up to the requested order
  /// (1 <= order <= 4); tensors are symmetric under index permutation.
  virtual void log_derivs(const double* x, const ParamPoint& theta, int order,
                          LogDerivs& out) const = 0;

  /// l_i = order-1 log_derivs.
  std::vector<double> score(const double* x, const ParamPoint& theta) const {
    LogDerivs d;
    log_derivs(x, theta, 1, d);
    return d.d1;
  }

  /// Draws count i.i.d. observations into out (resized by the callee).
  virtual void sample(const ParamPoint& theta, std::int64_t count, RngStream& rng,
                      ObservationBatch& out) const = 0;

  virtual MleResult mle(const ObservationBatch& obs) const = 0;

  /// Analytic Fisher metric (quadrature-backed for the mixture family).
  virtual FisherMatrix fisher(const ParamPoint& theta) const = 0;

  /// D_alpha[theta1 : theta2]; +infinity is a legitimate value.
  virtual double divergence(const ParamPoint& theta1, const ParamPoint& theta2,
                            double alpha) const = 0;

 protected:
  void require_point(const ParamPoint& theta) const {
    if (theta.dim() != param_dim()) {
      throw InvalidInput(name() + ": parameter has dimension " +
                         std::to_string(theta.dim()) + ", expected " +
                         std::to_string(param_dim()));
    }
    if (!theta.finite()) throw InvalidInput(name() + ": non-finite parameter");
  }
};

}  // namespace riskx
