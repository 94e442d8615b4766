#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "riskx/errors.hpp"
#include "riskx/model_family.hpp"

namespace riskx {

/// How +infinity divergences enter the aggregate. CountAndExclude reports
/// the finite-sample mean over finite replicates plus the excluded count;
/// Propagate reports mean = std_error = +infinity as soon as one replicate
/// is infinite.
enum class InfinitePolicy { CountAndExclude, Propagate };

struct SimulationPlan {
  const ModelFamily* family = nullptr;
  ParamPoint theta_true;
  double alpha = -1.0;
  std::int64_t n = 1;        // sample size per replicate
  std::int64_t reps = 100;   // >= 100
  std::uint64_t seed = 0;
  InfinitePolicy policy = InfinitePolicy::CountAndExclude;
  int workers = 0;  // 0 = hardware default
};

struct RiskEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t reps_used = 0;
  std::int64_t infinite_count = 0;
  std::optional<double> expansion_value;  // filled by callers that compare
};

/// Estimates E[D_alpha(theta-hat : theta_true)] over plan.reps replicates.
/// Replicate r draws its n observations from the substream keyed by
/// (seed, r), so any single replicate can be replayed in isolation and the
/// result is bit-identical for every worker count (block-local Kahan sums
/// combined by fixed-shape pairwise reduction).
///
/// Throws InvalidInput for a malformed plan and NumericError when every
/// replicate came out infinite (no finite mean exists) or a divergence
/// evaluated to NaN.
RiskEstimate simulate_risk(const SimulationPlan& plan);

/// Result of comparing empirical risks at two covariances that must agree.
struct InvarianceReport {
  RiskEstimate risk_a;
  RiskEstimate risk_b;
  double z = 0.0;  // |mean_a - mean_b| / sqrt(se_a^2 + se_b^2)
  bool pass = false;
};

/// Runs simulate_risk for N_p(0, Sigma_a) and N_p(0, Sigma_b) (packed
/// upper-triangle coordinates) with seeds seed and seed+1 and checks that
/// the means agree within 3 combined standard errors; the true risk depends
/// only on p, not Sigma.
InvarianceReport invariance_check_normal(int p, const std::vector<double>& sigma_a,
                                         const std::vector<double>& sigma_b,
                                         double alpha, std::int64_t n,
                                         std::int64_t reps, std::uint64_t seed,
                                         int workers = 0);

/// First-moment sanity check of the MLE: n * cov(theta-hat) against g_inv.
struct MleMomentReport {
  int dim = 0;
  std::vector<double> scaled_cov;  // n * empirical covariance, row-major
  std::vector<double> g_inv;
  std::vector<double> se;         // jackknife s.e. per scaled_cov entry
  std::vector<double> threshold;  // max(5 se, 5 max|g_inv| / n)
  bool pass = false;
};

/// Estimates cov(theta-hat) from reps replicates of size n and compares
/// n * cov to g_inv entrywise, within max(5 jackknife s.e., a bias budget of
/// 5 max|g^{ij}|/n that covers the O(n^-1) second-order term).
MleMomentReport mle_moment_check(const ModelFamily& family, const ParamPoint& theta,
                                 std::int64_t n, std::int64_t reps,
                                 std::uint64_t seed, int workers = 0);

}  // namespace riskx
