#include "riskx/divergence.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "riskx/models/two_normal_mixture.hpp"
#include "riskx/quadrature.hpp"
#include "riskx/summation.hpp"

namespace riskx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Expands packed upper-triangle coordinates into a dense symmetric matrix.
Eigen::MatrixXd unpack_symmetric(const std::vector<double>& coords, int p,
                                 const char* what) {
  const std::size_t d = static_cast<std::size_t>(p) * (p + 1) / 2;
  if (coords.size() != d) {
    std::ostringstream msg;
    msg << what << ": expected " << d << " upper-triangle coordinates for p=" << p
        << ", got " << coords.size();
    throw InvalidInput(msg.str());
  }
  Eigen::MatrixXd s(p, p);
  std::size_t k = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      s(i, j) = coords[k];
      s(j, i) = coords[k];
      ++k;
    }
  }
  return s;
}

/// log det of an SPD matrix from its Cholesky factor.
double log_det_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

/// Validates one side of a full probability vector; clamps -0-level noise.
std::vector<double> checked_simplex(const std::vector<double>& v, bool interior,
                                    const char* what) {
  std::vector<double> out = v;
  double total = 0.0;
  for (double& x : out) {
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite probability");
    if (interior && !(x > 0.0)) {
      throw InvalidInput(std::string(what) + ": truth must be interior (every category positive)");
    }
    if (x < 0.0) {
      if (x < -1e-12) throw InvalidInput(std::string(what) + ": negative probability");
      x = 0.0;
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidInput(std::string(what) + ": probabilities must sum to 1");
  }
  return out;
}

}  // namespace

double evaluate(const AlphaDivergenceRequest& req) {
  if (req.family == nullptr) throw InvalidInput("evaluate: request carries no family");
  return req.family->divergence(req.theta1, req.theta2, req.alpha);
}

double alpha_divergence_multinomial(const std::vector<double>& m_hat,
                                    const std::vector<double>& m, double alpha) {
  if (m.size() < 2 || m_hat.size() != m.size()) {
    throw InvalidInput(
        "alpha_divergence_multinomial: need two equal-length vectors with >= 2 categories");
  }
  const std::vector<double> q = checked_simplex(m, true, "alpha_divergence_multinomial");
  const std::vector<double> ph = checked_simplex(m_hat, false, "alpha_divergence_multinomial");
  const std::size_t cats = q.size();

  if (alpha == -1.0) {
    KahanSum acc;
    for (std::size_t i = 0; i < cats; ++i) {
      if (ph[i] > 0.0) acc.add(ph[i] * std::log(ph[i] / q[i]));
    }
    return acc.value();
  }
  if (alpha == 1.0) {
    KahanSum acc;
    for (std::size_t i = 0; i < cats; ++i) {
      if (ph[i] == 0.0) return kInf;
      acc.add(q[i] * std::log(q[i] / ph[i]));
    }
    return acc.value();
  }
  const double a = 0.5 * (1.0 - alpha);
  KahanSum acc;
  for (std::size_t i = 0; i < cats; ++i) {
    if (ph[i] == 0.0) {
      if (a < 0.0) return kInf;
      continue;
    }
    acc.add(std::pow(ph[i], a) * std::pow(q[i], 1.0 - a));
  }
  return 4.0 / (1.0 - alpha * alpha) * (1.0 - acc.value());
}

double alpha_divergence_normal(const std::vector<double>& sigma_hat,
                               const std::vector<double>& sigma, int p,
                               double alpha) {
  if (p < 1) throw InvalidInput("alpha_divergence_normal: p must be positive");
  const Eigen::MatrixXd s1 = unpack_symmetric(sigma_hat, p, "alpha_divergence_normal");
  const Eigen::MatrixXd s2 = unpack_symmetric(sigma, p, "alpha_divergence_normal");
  const Eigen::LLT<Eigen::MatrixXd> llt1(s1), llt2(s2);
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success) {
    throw InvalidInput("alpha_divergence_normal: both covariances must be positive definite");
  }

  if (alpha == -1.0) {
    // Stein loss of Sigma_hat against Sigma.
    const double tr = llt2.solve(s1).trace();
    return 0.5 * (tr - (log_det_llt(llt1) - log_det_llt(llt2)) - p);
  }
  if (alpha == 1.0) {
    const double tr = llt1.solve(s2).trace();
    return 0.5 * (tr - (log_det_llt(llt2) - log_det_llt(llt1)) - p);
  }

  const double a = 0.5 * (1.0 - alpha);
  const double b = 0.5 * (1.0 + alpha);
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd blend = a * llt1.solve(ident) + b * llt2.solve(ident);
  const Eigen::LLT<Eigen::MatrixXd> lltb(blend);
  if (lltb.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(blend);
    std::ostringstream msg;
    msg << "alpha_divergence_normal: blended precision matrix is not positive definite"
        << " at alpha=" << alpha << "; smallest eigenvalue " << es.eigenvalues().minCoeff();
    throw DivergenceUndefined(msg.str());
  }
  const double log_integral = -0.5 * log_det_llt(lltb) - 0.5 * a * log_det_llt(llt1) -
                              0.5 * b * log_det_llt(llt2);
  return 4.0 / (1.0 - alpha * alpha) * (1.0 - std::exp(log_integral));
}

double alpha_divergence_mixture(double theta1_hat, double theta1, double sigma2,
                                double alpha) {
  if (!(sigma2 > 0.0)) throw InvalidInput("alpha_divergence_mixture: sigma2 must be positive");
  if (!(theta1 > 0.0 && theta1 < 1.0)) {
    throw InvalidInput("alpha_divergence_mixture: truth theta1 must lie in (0,1)");
  }
  if (!(theta1_hat >= 0.0 && theta1_hat <= 1.0)) {
    throw InvalidInput("alpha_divergence_mixture: theta1_hat must lie in [0,1]");
  }
  const TwoNormalMixtureModel model(sigma2);
  ParamPoint ph, pt;
  ph.coords = {theta1_hat};
  pt.coords = {theta1};
  const auto log_f1 = [&](double x) { return model.log_density(&x, ph); };
  const auto log_f2 = [&](double x) { return model.log_density(&x, pt); };

  const double sd = std::sqrt(sigma2);
  const double lo = -10.0 * sd - 1.0;
  const double hi = 10.0 * sd + 2.0;
  constexpr double kRelTol = 1e-10;

  if (alpha == -1.0) {
    return integrate(
        [&](double x) {
          const double l1 = log_f1(x);
          return std::exp(l1) * (l1 - log_f2(x));
        },
        lo, hi, kRelTol);
  }
  if (alpha == 1.0) {
    return integrate(
        [&](double x) {
          const double l2 = log_f2(x);
          return std::exp(l2) * (l2 - log_f1(x));
        },
        lo, hi, kRelTol);
  }
  const double a = 0.5 * (1.0 - alpha);
  const double hellinger_like = integrate(
      [&](double x) { return std::exp(a * log_f1(x) + (1.0 - a) * log_f2(x)); }, lo,
      hi, kRelTol);
  return 4.0 / (1.0 - alpha * alpha) * (1.0 - hellinger_like);
}

}  // namespace riskx
