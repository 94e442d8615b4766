#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "riskx/model_family.hpp"

namespace riskx {

/// Zero-mean p-variate normal N_p(0, Sigma) parameterized by the upper
/// triangle sigma_ij (i <= j, row-major), param_dim = p(p+1)/2.
class ZeroMeanNormalModel : public ModelFamily {
 public:
  explicit ZeroMeanNormalModel(int p);

  std::string name() const override { return "normal"; }
  int param_dim() const override { return d_; }
  int obs_dim() const override { return p_; }
  int matrix_dim() const { return p_; }
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

  /// Coordinate index -> matrix position (i, j), i <= j.
  const std::vector<std::pair<int, int>>& coord_pairs() const { return pairs_; }

  /// Upper-triangle coordinates of a dense symmetric matrix / back.
  static ParamPoint from_matrix(const std::vector<double>& sym, int p);
  std::vector<double> to_matrix(const ParamPoint& theta) const;

 private:
  int p_;
  int d_;
  std::vector<std::pair<int, int>> pairs_;
};

/// MLE Sigma-hat = n^{-1} sum x x^T from n >= p samples; throws
/// DegenerateEstimate when the smallest eigenvalue is at tolerance.
MleResult normal_cov_mle(const ObservationBatch& samples);

}  // namespace riskx
