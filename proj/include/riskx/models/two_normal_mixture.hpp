#pragma once

#include <cstdint>
#include <vector>

#include "riskx/model_family.hpp"

namespace riskx {

/// One-parameter mixture (1-theta1) N(0, s2) + theta1 N(1, s2) with known
/// component variance s2; theta1 ranges over (0, 1).
class TwoNormalMixtureModel : public ModelFamily {
 public:
  explicit TwoNormalMixtureModel(double sigma2);

  std::string name() const override { return "mixture"; }
  int param_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  double sigma2() const { return s2_; }
  bool in_domain(const ParamPoint& theta) const override;

  double log_density(const double* x, const ParamPoint& theta) const override;
  void log_derivs(const double* x, const ParamPoint& theta, int order,
                  LogDerivs& out) const override;
  void sample(const ParamPoint& theta, std::int64_t count, RngStream& rng,
              ObservationBatch& out) const override;
  MleResult mle(const ObservationBatch& obs) const override;
  FisherMatrix fisher(const ParamPoint& theta) const override;
  double divergence(const ParamPoint& theta1, const ParamPoint& theta2,
                    double alpha) const override;

  /// Score factor t = h/f = (g1-g0)/f at x, evaluated overflow-safely; all
  /// log-derivatives are powers of it: l_1 = t, l_11 = -t^2, l_111 = 2 t^3,
  /// l_1111 = -6 t^4.
  double score_factor(double x, double theta1) const;

 private:
  double s2_;
};

/// MLE of theta1 on [1e-8, 1-1e-8] by golden-section bracketing plus Newton
/// polish (the log-likelihood is concave). A sample carrying no information
/// (h(x_i) ~ 0 for all i) yields theta1 = 0.5 with the flat flag set.
MleResult mixture_mle(const std::vector<double>& samples, double sigma2);

}  // namespace riskx
