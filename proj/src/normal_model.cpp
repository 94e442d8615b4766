#include "riskx/models/zero_mean_normal.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "riskx/divergence.hpp"

namespace riskx {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd coords_to_mat(const ParamPoint& theta, int p) {
  MatrixXd s(p, p);
  int a = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      s(i, j) = theta.coords[a];
      s(j, i) = theta.coords[a];
      ++a;
    }
  }
  return s;
}

/// E_a y for a basis direction a = (i, j): the symmetric unit perturbation
/// of sigma_ij applied to a vector.
inline void basis_apply(int i, int j, const VectorXd& y, VectorXd& out) {
  out.setZero();
  if (i == j) {
    out(i) = y(i);
  } else {
    out(i) = y(j);
    out(j) = y(i);
  }
}

/// u^T E_b z for b = (i, j).
inline double basis_quad(int i, int j, const VectorXd& u, const VectorXd& z) {
  return i == j ? u(i) * z(i) : u(i) * z(j) + u(j) * z(i);
}

}  // namespace

ZeroMeanNormalModel::ZeroMeanNormalModel(int p) : p_(p), d_(p * (p + 1) / 2) {
  if (p < 1) throw InvalidInput("normal: need p >= 1");
  pairs_.reserve(d_);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) pairs_.emplace_back(i, j);
}

ParamPoint ZeroMeanNormalModel::from_matrix(const std::vector<double>& sym, int p) {
  if (static_cast<int>(sym.size()) != p * p)
    throw InvalidInput("normal: matrix size mismatch");
  ParamPoint theta;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) theta.coords.push_back(sym[i * p + j]);
  return theta;
}

std::vector<double> ZeroMeanNormalModel::to_matrix(const ParamPoint& theta) const {
  require_point(theta);
  const MatrixXd s = coords_to_mat(theta, p_);
  std::vector<double> out(p_ * p_);
  for (int i = 0; i < p_; ++i)
    for (int j = 0; j < p_; ++j) out[i * p_ + j] = s(i, j);
  return out;
}

bool ZeroMeanNormalModel::in_domain(const ParamPoint& theta) const {
  if (theta.dim() != d_ || !theta.finite()) return false;
  const Eigen::LLT<MatrixXd> llt(coords_to_mat(theta, p_));
  return llt.info() == Eigen::Success;
}

double ZeroMeanNormalModel::log_density(const double* x, const ParamPoint& theta) const {
  require_point(theta);
  const MatrixXd sigma = coords_to_mat(theta, p_);
  const Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw InvalidInput("normal: Sigma not SPD");
  const Eigen::Map<const VectorXd> xv(x, p_);
  const VectorXd w = llt.solve(xv);
  double logdet = 0.0;
  for (int i = 0; i < p_; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * xv.dot(w) - 0.5 * logdet -
         0.5 * p_ * std::log(2.0 * std::numbers::pi);
}

void ZeroMeanNormalModel::log_derivs(const double* x, const ParamPoint& theta,
                                     int order, LogDerivs& out) const {
  require_point(theta);
  const MatrixXd sigma = coords_to_mat(theta, p_);
  const Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw InvalidInput("normal: Sigma not SPD");
  const MatrixXd S = llt.solve(MatrixXd::Identity(p_, p_));
  const Eigen::Map<const VectorXd> xv(x, p_);
  const VectorXd w = S * xv;
  out.resize(d_, order);

  // Per-direction helpers: v_a = E_a w, r_a = S v_a, M_a = S E_a.
  std::vector<VectorXd> v(d_, VectorXd(p_)), r(d_);
  std::vector<MatrixXd> M(d_);
  for (int a = 0; a < d_; ++a) {
    const auto [i, j] = pairs_[a];
    basis_apply(i, j, w, v[a]);
    r[a] = S * v[a];
    MatrixXd E = MatrixXd::Zero(p_, p_);
    E(i, j) = 1.0;
    E(j, i) = 1.0;
    M[a] = S * E;
  }

  // l = -x'Sx/2 - logdet(Sigma)/2 + const. Directional derivatives follow
  // from dS = -S E S: each order alternates sign and symmetrizes products
  // of E's threaded with S (quadratic part) and of M's (logdet part).
  for (int a = 0; a < d_; ++a) {
    const auto [i, j] = pairs_[a];
    out.d1[a] = 0.5 * basis_quad(i, j, w, w) - 0.5 * M[a].trace();
  }
  // Each distinct index multiset is evaluated once and the value is copied
  // to every permutation slot, so the returned tensors are symmetric to the
  // last bit rather than merely up to rounding.
  for (int a = 0; a < d_; ++a) {
    for (int b = a; b < d_; ++b) {
      const double val = -v[a].dot(r[b]) + 0.5 * (M[a] * M[b]).trace();
      out.d2[a * d_ + b] = val;
      out.d2[b * d_ + a] = val;
    }
  }
  if (order >= 3) {
    std::vector<MatrixXd> P(static_cast<std::size_t>(d_) * d_);
    for (int a = 0; a < d_; ++a)
      for (int b = 0; b < d_; ++b) P[a * d_ + b] = M[a] * M[b];
    for (int a = 0; a < d_; ++a) {
      const auto [ai, aj] = pairs_[a];
      for (int b = a; b < d_; ++b) {
        const auto [bi, bj] = pairs_[b];
        for (int c = b; c < d_; ++c) {
          // Sum over the 3 middle-index classes; reversal symmetry doubles.
          const auto [ci, cj] = pairs_[c];
          const double q3 = 2.0 * (basis_quad(bi, bj, r[a], r[c]) +
                                   basis_quad(ai, aj, r[b], r[c]) +
                                   basis_quad(ci, cj, r[a], r[b]));
          const double t3 = (P[a * d_ + b] * M[c]).trace() +
                            (P[a * d_ + c] * M[b]).trace();
          const double val = 0.5 * q3 - 0.5 * t3;
          const int ids[3] = {a, b, c};
          int pm[3] = {0, 1, 2};
          do {
            out.d3[(ids[pm[0]] * d_ + ids[pm[1]]) * d_ + ids[pm[2]]] = val;
          } while (std::next_permutation(pm, pm + 3));
        }
      }
    }
    if (order >= 4) {
      VectorXd y(p_), z(p_);
      for (int a = 0; a < d_; ++a) {
        for (int b = a; b < d_; ++b) {
          for (int c = b; c < d_; ++c) {
            for (int e = c; e < d_; ++e) {
              const int idx[4] = {a, b, c, e};
              // Quadratic part: all 24 orderings of w'E.SE.SE.SE.w.
              double q4 = 0.0;
              int perm[4] = {0, 1, 2, 3};
              do {
                const int s0 = idx[perm[0]], s1 = idx[perm[1]];
                const int s2 = idx[perm[2]], s3 = idx[perm[3]];
                basis_apply(pairs_[s2].first, pairs_[s2].second, r[s3], y);
                z = S * y;
                q4 += basis_quad(pairs_[s1].first, pairs_[s1].second, r[s0], z);
              } while (std::next_permutation(perm, perm + 4));
              // Logdet part: the 6 cyclic-distinct orderings of M products.
              double t4 = 0.0;
              const int rest[3] = {b, c, e};
              int rp[3] = {0, 1, 2};
              do {
                t4 += (M[a] * M[rest[rp[0]]] * M[rest[rp[1]]] * M[rest[rp[2]]]).trace();
              } while (std::next_permutation(rp, rp + 3));
              const double val = -0.5 * q4 + 0.5 * t4;
              int pm[4] = {0, 1, 2, 3};
              do {
                out.d4[((idx[pm[0]] * d_ + idx[pm[1]]) * d_ + idx[pm[2]]) * d_ +
                       idx[pm[3]]] = val;
              } while (std::next_permutation(pm, pm + 4));
            }
          }
        }
      }
    }
  }
}

void ZeroMeanNormalModel::sample(const ParamPoint& theta, std::int64_t count,
                                 RngStream& rng, ObservationBatch& out) const {
  require_point(theta);
  const Eigen::LLT<MatrixXd> llt(coords_to_mat(theta, p_));
  if (llt.info() != Eigen::Success) throw InvalidInput("normal: Sigma not SPD");
  const MatrixXd L = llt.matrixL();
  out.count = count;
  out.obs_dim = p_;
  out.data.resize(count * p_);
  VectorXd z(p_);
  for (std::int64_t k = 0; k < count; ++k) {
    for (int i = 0; i < p_; ++i) z(i) = rng.normal();
    Eigen::Map<VectorXd>(out.row(k), p_) = L * z;
  }
}

MleResult normal_cov_mle(const ObservationBatch& samples) {
  const int p = samples.obs_dim;
  const std::int64_t n = samples.count;
  if (n < p) {
    throw InvalidInput("normal_cov_mle: need n >= p samples, got n = " +
                       std::to_string(n) + ", p = " + std::to_string(p));
  }
  MatrixXd acc = MatrixXd::Zero(p, p);
  for (std::int64_t k = 0; k < n; ++k) {
    const Eigen::Map<const VectorXd> x(samples.row(k), p);
    if (!x.allFinite()) throw InvalidInput("normal_cov_mle: non-finite sample");
    acc.noalias() += x * x.transpose();
  }
  acc /= static_cast<double>(n);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(acc, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 1e-12 * std::max(1.0, hi)) {
    std::ostringstream msg;
    msg << "normal_cov_mle: sample covariance numerically singular "
        << "(min eigenvalue " << lo << ")";
    throw DegenerateEstimate(msg.str());
  }
  MleResult r;
  std::vector<double> flat(p * p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) flat[i * p + j] = acc(i, j);
  r.point = ZeroMeanNormalModel::from_matrix(flat, p);
  return r;
}

MleResult ZeroMeanNormalModel::mle(const ObservationBatch& obs) const {
  if (obs.obs_dim != p_) throw InvalidInput("normal: observation dim mismatch");
  return normal_cov_mle(obs);
}

FisherMatrix ZeroMeanNormalModel::fisher(const ParamPoint& theta) const {
  require_point(theta);
  const MatrixXd sigma = coords_to_mat(theta, p_);
  const Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericError("normal: Sigma not SPD");
  const MatrixXd S = llt.solve(MatrixXd::Identity(p_, p_));
  FisherMatrix f;
  f.dim = d_;
  f.g.resize(static_cast<std::size_t>(d_) * d_);
  f.g_inv.resize(f.g.size());
  // g_(ij)(kl) = (S_ik S_jl + S_il S_jk) / ((1+d_ij)(1+d_kl));
  // inverse     = sigma_ik sigma_jl + sigma_il sigma_jk.
  for (int a = 0; a < d_; ++a) {
    const auto [i, j] = pairs_[a];
    const double wa = i == j ? 0.5 : 1.0;
    for (int b = 0; b < d_; ++b) {
      const auto [k, l] = pairs_[b];
      const double wb = k == l ? 0.5 : 1.0;
      f.g[a * d_ + b] = wa * wb * (S(i, k) * S(j, l) + S(i, l) * S(j, k));
      f.g_inv[a * d_ + b] =
          sigma(i, k) * sigma(j, l) + sigma(i, l) * sigma(j, k);
    }
  }
  return f;
}

double ZeroMeanNormalModel::divergence(const ParamPoint& theta1,
                                       const ParamPoint& theta2,
                                       double alpha) const {
  return alpha_divergence_normal(theta1.coords, theta2.coords, p_, alpha);
}

}  // namespace riskx
