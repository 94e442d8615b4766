#pragma once

#include <string>
#include <vector>

#include "riskx/errors.hpp"
#include "riskx/geometry.hpp"

namespace riskx {

/// Which formula produced an ExpansionResult.
enum class ExpansionMethod {
  General,
  ExponentialCorollary,
  MixtureCorollary,
  MultinomialClosed,
  NormalClosed,
};

std::string to_string(ExpansionMethod method);

/// Second-order risk expansion: E[D_alpha] = c1/n + c2/n^2 + o(n^-2),
/// with c1 = (parameter count)/2 on every path.
struct ExpansionResult {
  double c1 = 0.0;
  double c2 = 0.0;
  double alpha = -1.0;
  double alpha_prime = 1.0;  // (1 - alpha)/2
  ExpansionMethod method = ExpansionMethod::General;
  double se_c2 = 0.0;  // jackknife standard error when c2 is MC-derived

  double value(double n) const { return c1 / n + c2 / (n * n); }
};

/// The full second-order coefficient from scalar invariants. inv.F_e is the
/// F convention used here; holders of F_m convert via F_e = F_m + TdTd.
/// c2 = (1/24) [ a^2 {3F_e + 3TT - 6(S_em_c - S_ee_c) - 3(S_em_t - S_ee_t)
///                    + 3p^2 + 6p}
///             + a {3F_e - 5TT - 6TdTd + 6(S_em_c - S_ee_c)
///                  + 3(S_em_t - S_ee_t) - 3p^2 - 6p}
///             + 12 S_ee_c - 2 S_em_c - S_em_t + TT + 9 TdTd + 8R - 9F_e ]
/// with a = (1-alpha)/2.
ExpansionResult expansion_general(const ScalarInvariants& inv, int p, double alpha);

/// Exponential-family reduction (requires S_* = R = 0 within
/// max(4 se, 1e-9); violations are contract errors):
/// c2 = (1/24) [ a^2 {3F_e + 3TT + 3p^2 + 6p}
///             + a {3F_e - 5TT - 6TdTd - 3p^2 - 6p} + TT + 9TdTd - 9F_e ]
ExpansionResult expansion_exponential_family(const ScalarInvariants& inv, int p,
                                             double alpha);

/// Mixture-family reduction (requires S_em_* = R = 0 within
/// max(4 se, 1e-9); S_ee_* remain):
/// c2 = (1/24) [ a^2 {3F_e + 3TT + 6 S_ee_c + 3 S_ee_t + 3p^2 + 6p}
///             + a {3F_e - 5TT - 6TdTd - 6 S_ee_c - 3 S_ee_t - 3p^2 - 6p}
///             + 12 S_ee_c + TT + 9TdTd - 9F_e ]
ExpansionResult expansion_mixture_family(const ScalarInvariants& inv, int p,
                                         double alpha);

/// Closed form for the multinomial family with free coordinates m
/// (m_0 = 1 - sum): with M = sum_t 1/m_t,
/// c2 = (1/96) {(3+alpha)(7+3alpha)(M-1) - 6(alpha+3)(alpha+1) p}.
/// Vanishes identically at alpha = -3.
ExpansionResult expansion_multinomial_closed(const std::vector<double>& m_free,
                                             double alpha);

/// Closed form for the zero-mean p-variate normal family (parameter count
/// d = p(p+1)/2, so c1 = p(p+1)/4); constant in Sigma:
/// c2 = (1/96) [ a^2 (3p^4 + 30p^3 + 75p^2 + 72p)
///             - a (3p^4 + 62p^3 + 147p^2 + 128p)
///             + 40p^3 + 84p^2 + 52p ],   a = (1-alpha)/2.
/// The quartic terms come from the 3d^2 blocks of the exponential-family
/// reduction at d = p(p+1)/2; the bracket agrees with
/// expansion_exponential_family fed analytic_invariants_normal for all p,
/// and is validated against exact and Monte-Carlo risk evaluations in the
/// test suite (alpha = -1 reduces to (2p^3 + 3p^2 - p)/24).
ExpansionResult expansion_normal_closed(int p, double alpha);

/// Independently transcribed reductions at alpha = -1 (KL), 0 (Hellinger),
/// and -3 (chi-squared); each must equal expansion_general at that alpha.
struct SpecialAlphaResults {
  ExpansionResult kl;         // alpha = -1
  ExpansionResult hellinger;  // alpha = 0
  ExpansionResult chisq;      // alpha = -3
};

SpecialAlphaResults special_alpha_reductions(const ScalarInvariants& inv, int p);

/// Full MC pipeline: derives invariants from estimated L-moments, applies
/// the requested formula, and jackknifes c2 over the moment blocks (the
/// metric is analytic and held fixed). Only General, ExponentialCorollary
/// and MixtureCorollary are valid methods here.
ExpansionResult expansion_from_l_moments(const LMoments& lm, const FisherMatrix& g,
                                         double alpha, ExpansionMethod method);

}  // namespace riskx
