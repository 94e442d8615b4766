#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "riskx/errors.hpp"
#include "riskx/model_family.hpp"

namespace riskx {

/// Raw expectation tensors of log-likelihood derivatives, averaged over
/// draws. Naming: `d2` is the Hessian block l_(ij), `s` a score factor l_i,
/// `d3` the third-derivative block l_(ijk). All arrays are dense row-major
/// over the parameter dimension.
struct RawMoments {
  int dim = 0;
  std::vector<double> d2;    // p^2:  E[l_(ij)]
  std::vector<double> ss;    // p^2:  E[l_i l_j]
  std::vector<double> d2s;   // p^3:  E[l_(ij) l_k]
  std::vector<double> sss;   // p^3:  E[l_i l_j l_k]
  std::vector<double> d2d2;  // p^4:  E[l_(ij) l_(kl)]
  std::vector<double> d3s;   // p^4:  E[l_(ijk) l_l]
  std::vector<double> d2ss;  // p^4:  E[l_(ij) l_k l_l]
  std::vector<double> ssss;  // p^4:  E[l_i l_j l_k l_l]

  void resize(int p);
  void add(const RawMoments& other);
  void sub(const RawMoments& other);
  void scale(double factor);
};

/// The eleven metric-contracted scalars built from RawMoments.
struct LScalars {
  double L11 = 0;  // g^{ij} g^{kl} E[l_(il) l_j l_k]
  double L12 = 0;  // g^{ij} g^{kl} E[l_(ij) l_k l_l]
  double L13 = 0;  // g^{ij} g^{kl} E[l_i l_j l_k l_l]
  double L14 = 0;  // g^{ij} g^{kl} E[l_(ik) l_(jl)]
  double L15 = 0;  // g^{ij} g^{kl} E[l_(ij) l_(kl)]
  double L21 = 0;  // g^{ia} g^{jb} g^{kc} G_{ij,k} T_{abc}
  double L22 = 0;  // (g^{ij} G_{ij,s}) g^{st} (g^{ab} T_{abt})
  double L23 = 0;  // g^{ia} g^{jb} g^{kc} T_{ijk} T_{abc}
  double L24 = 0;  // (g^{ij} T_{ijs}) g^{st} (g^{kl} T_{klt})
  double L25 = 0;  // g^{ia} g^{jb} g^{kc} G_{ij,k} G_{ab,c}
  double L26 = 0;  // (g^{ij} G_{ij,s}) g^{st} (g^{ab} G_{ab,t})
  // G_{ij,k} = E[l_(ij) l_k] (exponential-connection Christoffel symbols),
  // T_{ijk} = E[l_i l_j l_k] (skewness tensor).
};

/// Monte-Carlo L-moment estimate: full-sample means, per-block sums for
/// jackknifing, the metric used in contractions, and the contracted scalars
/// with delete-block jackknife standard errors.
struct LMoments {
  int dim = 0;
  std::int64_t mc_count = 0;
  RawMoments raw;                      // full-sample means
  RawMoments total_sums;               // sums over all draws
  std::vector<RawMoments> block_sums;  // per-block sums
  std::vector<std::int64_t> block_counts;
  FisherMatrix g;
  LScalars scalars;
  LScalars scalar_se;
};

/// Scalar information-geometric invariants, with standard errors when
/// estimated by Monte Carlo (zero for analytic paths, mc_count = 0).
struct ScalarInvariants {
  double alpha = -1.0;
  double F_alpha = 0;
  double F_e = 0;  // F at alpha = +1
  double F_m = 0;  // F at alpha = -1; F_e = F_m + TdTd
  double TT = 0;      // T_{ijk} T^{ijk}
  double TdTd = 0;    // T_{is}^{i} T_j^{js}
  double Rcontract = 0;  // curvature contraction R_{ij}^{ij}
  double S_ee_cross = 0;
  double S_ee_trace = 0;
  double S_em_cross = 0;
  double S_em_trace = 0;
  double se_F_alpha = 0, se_F_e = 0, se_F_m = 0;
  double se_TT = 0, se_TdTd = 0, se_Rcontract = 0;
  double se_S_ee_cross = 0, se_S_ee_trace = 0;
  double se_S_em_cross = 0, se_S_em_trace = 0;
  std::int64_t mc_count = 0;
};

/// Fisher metric with consistency checks: delegates to the family, then
/// verifies that g is SPD and that g * g_inv = I within 1e-8.
FisherMatrix fisher_matrix(const ModelFamily& family, const ParamPoint& theta);

/// Estimates the raw L-moment tensors by Monte Carlo: mc_samples draws split
/// over 100 fixed blocks, each block on its own counter-keyed substream so
/// the result is bit-identical for any worker count. Contractions use the
/// family's analytic Fisher matrix. Standard errors come from the
/// delete-block jackknife.
///
/// Throws InvalidInput for mc_samples < 1000 or a non-interior theta, and
/// NumericError when a draw produces a non-finite derivative (the offending
/// observation is reported).
LMoments estimate_l_moments(const ModelFamily& family, const ParamPoint& theta,
                            std::int64_t mc_samples, std::uint64_t seed,
                            int workers = 0);

/// Contracts raw moment means with g_inv into the eleven scalars.
LScalars contract_l_scalars(const RawMoments& means, const FisherMatrix& g);

/// Delete-block jackknife standard error of an arbitrary statistic of the
/// raw-moment means. The metric is treated as fixed (it is analytic, not
/// estimated), so only the moment tensors are resampled.
double jackknife_scalar(const LMoments& lm,
                        const std::function<double(const RawMoments&)>& stat);

/// Derives the scalar invariants from already-contracted scalars, without
/// standard errors. Used for jackknife replicates and tests.
ScalarInvariants invariants_from_scalars(const LScalars& s, int p, double alpha);

/// Derives the scalar invariants from contracted L-moments:
///   F_alpha    = 2 L11 + L12 + L13 - 2 L21 - L23 - L22 - a L24,  a = (1-alpha)/2
///   TT         = L23
///   TdTd       = L24
///   Rcontract  = L14 - L15 + L11 - L12 - L25 + L26 + L22 - L21
///   S_ee_cross = L14 - L25 - p          S_ee_trace = L15 - L26 - p^2
///   S_em_cross = L11 + L14 - L25 - L21  S_em_trace = L12 + L15 - L26 - L22
/// with jackknife standard errors for every output.
ScalarInvariants invariants_from_l_moments(const LMoments& lm,
                                           const FisherMatrix& g, double alpha);

/// Closed-form invariants for the multinomial family with free coordinates
/// m = (m_1, ..., m_p), m_0 = 1 - sum m_i. With M = sum_t 1/m_t:
///   TT = M - 3p - 1,  TdTd = M - (p+1)^2,  F_m = -M + p + 1,
///   F_e = F_m + TdTd, and R = S_* = 0 (exponential family).
ScalarInvariants analytic_invariants_multinomial(const std::vector<double>& m_free,
                                                 double alpha = -1.0);

/// Closed-form invariants for the zero-mean p-variate normal family:
///   TT = p^3 + 3p^2 + 4p,  TdTd = 2p^3 + 4p^2 + 2p = 2p(p+1)^2,
///   F_m = -p(p+1)^2,       F_e = F_m + TdTd = p(p+1)^2,
/// and R = S_* = 0. TT, TdTd are confirmed by three independent routes:
/// exact Gaussian moment algebra (Isserlis expansions) at p = 1, 2, 3, the
/// loop-count enumeration in `contraction`, and Monte-Carlo estimation.
ScalarInvariants analytic_invariants_normal(int p, double alpha = -1.0);

}  // namespace riskx
