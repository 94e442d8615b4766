#pragma once

#include <vector>

#include "riskx/errors.hpp"
#include "riskx/model_family.hpp"

namespace riskx {

/// Request bundle for evaluating D_alpha[theta1 : theta2] under a family.
/// theta1 is the first slot of the divergence (typically an estimate),
/// theta2 the second (typically the truth).
struct AlphaDivergenceRequest {
  double alpha = -1.0;
  ParamPoint theta1;
  ParamPoint theta2;
  const ModelFamily* family = nullptr;
};

/// Dispatches the request to the family's divergence implementation.
double evaluate(const AlphaDivergenceRequest& req);

/// D_alpha between two categorical distributions given as full probability
/// vectors (p+1 entries each, summing to 1). m_hat may touch the simplex
/// boundary; m must be interior. +infinity is a legitimate return value:
/// it appears when a zero cell of m_hat meets a negative exponent.
///
/// Branches:
///   alpha = -1:        sum m_hat_i log(m_hat_i / m_i), with 0 log 0 := 0
///   alpha = +1:        sum m_i log(m_i / m_hat_i)
///   otherwise:         4/(1-alpha^2) {1 - sum m_hat_i^a m_i^(1-a)},
///                      a = (1-alpha)/2
double alpha_divergence_multinomial(const std::vector<double>& m_hat,
                                    const std::vector<double>& m, double alpha);

/// D_alpha between N_p(0, Sigma_hat) and N_p(0, Sigma). Covariances are
/// passed as upper-triangle coordinates, row-major over pairs (i,j) with
/// i <= j. alpha = -1 is Stein loss
///   (1/2){tr(Sigma^-1 Sigma_hat) - log det(Sigma^-1 Sigma_hat) - p},
/// alpha = +1 the same with the roles swapped, and any other alpha uses the
/// closed Gaussian product integral with the blended precision matrix
/// B = a Sigma_hat^-1 + (1-a) Sigma^-1, a = (1-alpha)/2. Throws
/// DivergenceUndefined when B is not positive definite, which can happen
/// for |alpha| > 1; the message reports the offending eigenvalue.
double alpha_divergence_normal(const std::vector<double>& sigma_hat,
                               const std::vector<double>& sigma, int p,
                               double alpha);

/// D_alpha between the two-component location mixtures
/// (1-theta) N(0, sigma2) + theta N(1, sigma2) at theta1_hat and theta1,
/// by adaptive composite Gauss-Legendre quadrature over
/// [-10 sigma - 1, 10 sigma + 2], refined until successive estimates agree
/// to 1e-10 relative. theta1_hat may sit on the closed interval [0, 1]
/// (the density stays positive, so every alpha is finite); theta1 must be
/// interior.
double alpha_divergence_mixture(double theta1_hat, double theta1, double sigma2,
                                double alpha);

}  // namespace riskx
