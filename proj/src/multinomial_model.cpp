#include "riskx/models/multinomial.hpp"

#include <cmath>

#include "riskx/divergence.hpp"

namespace riskx {

MultinomialModel::MultinomialModel(int p) : p_(p) {
  if (p < 1) throw InvalidInput("multinomial: need p >= 1");
}

std::vector<double> MultinomialModel::full_probs(const ParamPoint& theta) {
  std::vector<double> m(theta.coords.size() + 1);
  double rest = 0.0;
  for (std::size_t i = 0; i < theta.coords.size(); ++i) {
    m[i + 1] = theta.coords[i];
    rest += theta.coords[i];
  }
  m[0] = 1.0 - rest;
  return m;
}

bool MultinomialModel::in_domain(const ParamPoint& theta) const {
  if (theta.dim() != p_ || !theta.finite()) return false;
  double sum = 0.0;
  for (double c : theta.coords) {
    if (c <= 0.0) return false;
    sum += c;
  }
  return sum < 1.0;
}

double MultinomialModel::log_density(const double* x, const ParamPoint& theta) const {
  require_point(theta);
  const int t = static_cast<int>(*x);
  if (t < 0 || t > p_) throw InvalidInput("multinomial: category out of range");
  const std::vector<double> m = full_probs(theta);
  return std::log(m[t]);
}

void MultinomialModel::log_derivs(const double* x, const ParamPoint& theta,
                                  int order, LogDerivs& out) const {
  require_point(theta);
  const int t = static_cast<int>(*x);
  if (t < 0 || t > p_) throw InvalidInput("multinomial: category out of range");
  out.resize(p_, order);
  // log f = log m_t with dm_t/dm_i = delta_{it} for t >= 1 and -1 for t = 0,
  // so each derivative order is (-1)^{k+1} (k-1)! u_i...u_j / m_t^k with
  // constant direction factors u.
  const std::vector<double> m = full_probs(theta);
  const double mt = m[t];
  std::vector<double> u(p_);
  for (int i = 0; i < p_; ++i) u[i] = (t == 0) ? -1.0 : (i + 1 == t ? 1.0 : 0.0);

  for (int i = 0; i < p_; ++i) out.d1[i] = u[i] / mt;
  for (int i = 0; i < p_; ++i)
    for (int j = 0; j < p_; ++j) out.d2[i * p_ + j] = -u[i] * u[j] / (mt * mt);
  if (order >= 3) {
    const double c3 = 2.0 / (mt * mt * mt);
    for (int i = 0; i < p_; ++i)
      for (int j = 0; j < p_; ++j)
        for (int k = 0; k < p_; ++k)
          out.d3[(i * p_ + j) * p_ + k] = c3 * u[i] * u[j] * u[k];
  }
  if (order >= 4) {
    const double c4 = -6.0 / (mt * mt * mt * mt);
    for (int i = 0; i < p_; ++i)
      for (int j = 0; j < p_; ++j)
        for (int k = 0; k < p_; ++k)
          for (int l = 0; l < p_; ++l)
            out.d4[((i * p_ + j) * p_ + k) * p_ + l] = c4 * u[i] * u[j] * u[k] * u[l];
  }
}

void MultinomialModel::sample(const ParamPoint& theta, std::int64_t count,
                              RngStream& rng, ObservationBatch& out) const {
  require_point(theta);
  const std::vector<double> m = full_probs(theta);
  out.count = count;
  out.obs_dim = 1;
  out.data.resize(count);
  for (std::int64_t i = 0; i < count; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    int cat = p_;  // guards against rounding at u ~ 1
    for (int t = 0; t <= p_; ++t) {
      acc += m[t];
      if (u < acc) {
        cat = t;
        break;
      }
    }
    out.data[i] = static_cast<double>(cat);
  }
}

MleResult multinomial_mle(const std::vector<std::int64_t>& counts) {
  std::int64_t n = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw InvalidInput("multinomial_mle: negative count");
    n += c;
  }
  if (counts.size() < 2) throw InvalidInput("multinomial_mle: need p+1 >= 2 categories");
  if (n == 0) throw InvalidInput("multinomial_mle: zero total count");
  MleResult r;
  r.point.coords.resize(counts.size() - 1);
  bool boundary = false;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] == 0) boundary = true;
    if (t >= 1) r.point.coords[t - 1] = static_cast<double>(counts[t]) / n;
  }
  r.boundary = boundary;
  return r;
}

MleResult MultinomialModel::mle(const ObservationBatch& obs) const {
  std::vector<std::int64_t> counts(p_ + 1, 0);
  for (std::int64_t i = 0; i < obs.count; ++i) {
    const int t = static_cast<int>(obs.data[i]);
    if (t < 0 || t > p_) throw InvalidInput("multinomial: category out of range");
    ++counts[t];
  }
  return multinomial_mle(counts);
}

FisherMatrix MultinomialModel::fisher(const ParamPoint& theta) const {
  require_point(theta);
  if (!in_domain(theta)) throw InvalidInput("multinomial: theta not interior");
  const std::vector<double> m = full_probs(theta);
  FisherMatrix f;
  f.dim = p_;
  f.g.resize(static_cast<std::size_t>(p_) * p_);
  f.g_inv.resize(f.g.size());
  // g_ij = 1/m_0 + delta_ij / m_i; inverse g^ij = m_i (delta_ij - m_j).
  for (int i = 0; i < p_; ++i) {
    for (int j = 0; j < p_; ++j) {
      f.g[i * p_ + j] = 1.0 / m[0] + (i == j ? 1.0 / m[i + 1] : 0.0);
      f.g_inv[i * p_ + j] = m[i + 1] * ((i == j ? 1.0 : 0.0) - m[j + 1]);
    }
  }
  return f;
}

double MultinomialModel::divergence(const ParamPoint& theta1, const ParamPoint& theta2,
                                    double alpha) const {
  return alpha_divergence_multinomial(full_probs(theta1), full_probs(theta2), alpha);
}

}  // namespace riskx
