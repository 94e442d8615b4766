#include "riskx/simulation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "riskx/geometry.hpp"
#include "riskx/models/zero_mean_normal.hpp"
#include "riskx/parallel.hpp"
#include "riskx/summation.hpp"

namespace riskx {

namespace {

constexpr std::int64_t kRepsPerBlock = 4096;
constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_plan(const SimulationPlan& plan) {
  if (plan.family == nullptr) throw InvalidInput("simulate_risk: plan carries no family");
  if (plan.reps < 100) throw InvalidInput("simulate_risk: need at least 100 replicates");
  if (plan.n < 1) throw InvalidInput("simulate_risk: n must be >= 1");
  if (!plan.family->in_domain(plan.theta_true)) {
    throw InvalidInput("simulate_risk: theta_true must be interior for " +
                       plan.family->name());
  }
}

struct BlockPartial {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t used = 0;
  std::int64_t infinite = 0;
};

}  // namespace

RiskEstimate simulate_risk(const SimulationPlan& plan) {
  validate_plan(plan);
  const ModelFamily& family = *plan.family;
  const std::int64_t blocks = (plan.reps + kRepsPerBlock - 1) / kRepsPerBlock;
  std::vector<BlockPartial> partials(blocks);
  std::vector<std::string> block_errors(blocks);

  for_each_block(blocks, resolve_workers(plan.workers), [&](std::int64_t b) {
    try {
      const std::int64_t first = b * kRepsPerBlock;
      const std::int64_t last = std::min(plan.reps, first + kRepsPerBlock);
      BlockPartial& out = partials[b];
      KahanSum sum, sum_sq;
      ObservationBatch batch;
      for (std::int64_t r = first; r < last; ++r) {
        RngStream rng(plan.seed, StreamPurpose::Simulation,
                      static_cast<std::uint64_t>(r));
        family.sample(plan.theta_true, plan.n, rng, batch);
        const MleResult fit = family.mle(batch);
        const double d = family.divergence(fit.point, plan.theta_true, plan.alpha);
        if (std::isnan(d)) {
          std::ostringstream msg;
          msg << "simulate_risk: divergence evaluated to NaN at replicate " << r;
          throw NumericError(msg.str());
        }
        if (std::isinf(d)) {
          ++out.infinite;
          continue;
        }
        sum.add(d);
        sum_sq.add(d * d);
        ++out.used;
      }
      out.sum = sum.value();
      out.sum_sq = sum_sq.value();
    } catch (const std::exception& e) {
      block_errors[b] = e.what();
    }
  });
  for (const std::string& err : block_errors) {
    if (!err.empty()) throw NumericError(err);
  }

  std::vector<double> sums(blocks), sums_sq(blocks);
  std::int64_t used = 0, infinite = 0;
  for (std::int64_t b = 0; b < blocks; ++b) {
    sums[b] = partials[b].sum;
    sums_sq[b] = partials[b].sum_sq;
    used += partials[b].used;
    infinite += partials[b].infinite;
  }

  RiskEstimate est;
  est.infinite_count = infinite;
  if (plan.policy == InfinitePolicy::Propagate && infinite > 0) {
    est.mean = kInf;
    est.std_error = kInf;
    est.reps_used = plan.reps;
    return est;
  }
  if (used == 0) {
    throw NumericError(
        "simulate_risk: every replicate produced an infinite divergence; "
        "no finite risk estimate exists (try alpha < 1 or larger n)");
  }
  const double total = pairwise_total(sums);
  const double total_sq = pairwise_total(sums_sq);
  const double mean = total / static_cast<double>(used);
  est.mean = mean;
  est.reps_used = used;
  if (used > 1) {
    const double var =
        (total_sq - static_cast<double>(used) * mean * mean) / (used - 1.0);
    est.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(used));
  }
  return est;
}

InvarianceReport invariance_check_normal(int p, const std::vector<double>& sigma_a,
                                         const std::vector<double>& sigma_b,
                                         double alpha, std::int64_t n,
                                         std::int64_t reps, std::uint64_t seed,
                                         int workers) {
  const ZeroMeanNormalModel model(p);
  SimulationPlan plan;
  plan.family = &model;
  plan.alpha = alpha;
  plan.n = n;
  plan.reps = reps;
  plan.workers = workers;

  plan.theta_true.coords = sigma_a;
  plan.seed = seed;
  InvarianceReport report;
  report.risk_a = simulate_risk(plan);

  plan.theta_true.coords = sigma_b;
  plan.seed = seed + 1;
  report.risk_b = simulate_risk(plan);

  const double pooled = std::sqrt(report.risk_a.std_error * report.risk_a.std_error +
                                  report.risk_b.std_error * report.risk_b.std_error);
  report.z = std::abs(report.risk_a.mean - report.risk_b.mean) / pooled;
  report.pass = report.z < 3.0;
  return report;
}

MleMomentReport mle_moment_check(const ModelFamily& family, const ParamPoint& theta,
                                 std::int64_t n, std::int64_t reps,
                                 std::uint64_t seed, int workers) {
  if (reps < 100) throw InvalidInput("mle_moment_check: need at least 100 replicates");
  if (!family.in_domain(theta)) {
    throw InvalidInput("mle_moment_check: theta must be interior for " + family.name());
  }
  const int p = family.param_dim();
  const std::size_t p2 = static_cast<std::size_t>(p) * p;
  const FisherMatrix fisher = fisher_matrix(family, theta);

  constexpr int kBlocks = 100;
  const std::int64_t base = reps / kBlocks;
  const std::int64_t rem = reps % kBlocks;
  struct MomentBlock {
    std::vector<double> sum;     // p
    std::vector<double> sum_sq;  // p^2, outer products
    std::int64_t count = 0;
  };
  std::vector<MomentBlock> blocks(kBlocks);
  std::vector<std::string> block_errors(kBlocks);

  for_each_block(kBlocks, resolve_workers(workers), [&](std::int64_t b) {
    try {
      MomentBlock& out = blocks[b];
      out.sum.assign(p, 0.0);
      out.sum_sq.assign(p2, 0.0);
      out.count = base + (b < rem ? 1 : 0);
      const std::int64_t first = b * base + std::min<std::int64_t>(b, rem);
      ObservationBatch batch;
      for (std::int64_t i = 0; i < out.count; ++i) {
        const std::int64_t r = first + i;
        RngStream rng(seed, StreamPurpose::Simulation, static_cast<std::uint64_t>(r));
        family.sample(theta, n, rng, batch);
        const MleResult fit = family.mle(batch);
        for (int a = 0; a < p; ++a) {
          out.sum[a] += fit.point.coords[a];
          for (int c = 0; c < p; ++c) {
            out.sum_sq[static_cast<std::size_t>(a) * p + c] +=
                fit.point.coords[a] * fit.point.coords[c];
          }
        }
      }
    } catch (const std::exception& e) {
      block_errors[b] = e.what();
    }
  });
  for (const std::string& err : block_errors) {
    if (!err.empty()) throw NumericError(err);
  }

  // Scaled covariance from totals over a subset of blocks (all, or all but
  // one for the jackknife replicates).
  const auto scaled_cov_excluding = [&](int skip) {
    std::vector<double> sum(p, 0.0), sum_sq(p2, 0.0);
    std::int64_t count = 0;
    for (int b = 0; b < kBlocks; ++b) {
      if (b == skip) continue;
      count += blocks[b].count;
      for (int a = 0; a < p; ++a) sum[a] += blocks[b].sum[a];
      for (std::size_t k = 0; k < p2; ++k) sum_sq[k] += blocks[b].sum_sq[k];
    }
    std::vector<double> cov(p2, 0.0);
    for (int a = 0; a < p; ++a) {
      for (int c = 0; c < p; ++c) {
        const double cross = sum_sq[static_cast<std::size_t>(a) * p + c] -
                             sum[a] * sum[c] / static_cast<double>(count);
        cov[static_cast<std::size_t>(a) * p + c] =
            static_cast<double>(n) * cross / (static_cast<double>(count) - 1.0);
      }
    }
    return cov;
  };

  MleMomentReport report;
  report.dim = p;
  report.g_inv = fisher.g_inv;
  report.scaled_cov = scaled_cov_excluding(-1);

  std::vector<std::vector<double>> reps_cov(kBlocks);
  for (int b = 0; b < kBlocks; ++b) reps_cov[b] = scaled_cov_excluding(b);
  report.se.assign(p2, 0.0);
  for (std::size_t k = 0; k < p2; ++k) {
    double mean = 0.0;
    for (int b = 0; b < kBlocks; ++b) mean += reps_cov[b][k];
    mean /= kBlocks;
    double ss = 0.0;
    for (int b = 0; b < kBlocks; ++b) {
      const double d = reps_cov[b][k] - mean;
      ss += d * d;
    }
    report.se[k] = std::sqrt((kBlocks - 1.0) / kBlocks * ss);
  }

  double max_ginv = 0.0;
  for (double v : fisher.g_inv) max_ginv = std::max(max_ginv, std::abs(v));
  const double bias_budget = 5.0 * max_ginv / static_cast<double>(n);
  report.threshold.assign(p2, 0.0);
  report.pass = true;
  for (std::size_t k = 0; k < p2; ++k) {
    report.threshold[k] = std::max(5.0 * report.se[k], bias_budget);
    if (std::abs(report.scaled_cov[k] - report.g_inv[k]) > report.threshold[k]) {
      report.pass = false;
    }
  }
  return report;
}

}  // namespace riskx
