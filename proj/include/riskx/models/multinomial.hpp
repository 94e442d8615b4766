#pragma once

#include <cstdint>
#include <vector>

#include "riskx/model_family.hpp"

namespace riskx {

/// Multinomial family over p+1 categories with free parameters
/// m = (m_1, ..., m_p) and m_0 = 1 - sum m_i. Observations are category
/// labels 0..p stored as doubles.
class MultinomialModel : public ModelFamily {
 public:
  explicit MultinomialModel(int p);

  std::string name() const override { return "multinomial"; }
  int param_dim() const override { return p_; }
  int obs_dim() const override { return 1; }
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

  /// Full probability vector (m_0, m_1, ..., m_p).
  static std::vector<double> full_probs(const ParamPoint& theta);

 private:
  int p_;
};

/// MLE from category counts (length p+1): m-hat_i = count_i / n.
/// Zero-count categories put the estimate on the boundary (flagged).
MleResult multinomial_mle(const std::vector<std::int64_t>& counts);

}  // namespace riskx
