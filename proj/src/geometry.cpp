#include "riskx/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "riskx/parallel.hpp"
#include "riskx/rng.hpp"

namespace riskx {

namespace {

constexpr int kJackknifeBlocks = 100;

void check_sized(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw InvalidInput(std::string("fisher_matrix: family returned a malformed ") + what);
  }
}

/// Adds one observation's derivative products into the running sums.
void accumulate(RawMoments& acc, const LogDerivs& d) {
  const int p = acc.dim;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const std::size_t ij = static_cast<std::size_t>(i) * p + j;
      acc.d2[ij] += d.d2[ij];
      acc.ss[ij] += d.d1[i] * d.d1[j];
      for (int k = 0; k < p; ++k) {
        const std::size_t ijk = ij * p + k;
        acc.d2s[ijk] += d.d2[ij] * d.d1[k];
        acc.sss[ijk] += d.d1[i] * d.d1[j] * d.d1[k];
        for (int l = 0; l < p; ++l) {
          const std::size_t ijkl = ijk * p + l;
          const std::size_t kl = static_cast<std::size_t>(k) * p + l;
          acc.d2d2[ijkl] += d.d2[ij] * d.d2[kl];
          acc.d3s[ijkl] += d.d3[ijk] * d.d1[l];
          acc.d2ss[ijkl] += d.d2[ij] * d.d1[k] * d.d1[l];
          acc.ssss[ijkl] += d.d1[i] * d.d1[j] * d.d1[k] * d.d1[l];
        }
      }
    }
  }
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

/// Leave-one-block-out means for every block.
std::vector<RawMoments> leave_one_out_means(const LMoments& lm) {
  std::vector<RawMoments> out(lm.block_sums.size());
  for (std::size_t b = 0; b < lm.block_sums.size(); ++b) {
    RawMoments loo = lm.total_sums;
    loo.sub(lm.block_sums[b]);
    loo.scale(1.0 / static_cast<double>(lm.mc_count - lm.block_counts[b]));
    out[b] = std::move(loo);
  }
  return out;
}

double se_from_replicates(const std::vector<double>& vals) {
  const std::size_t b = vals.size();
  if (b < 2) return 0.0;
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(b);
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  return std::sqrt((static_cast<double>(b) - 1.0) / static_cast<double>(b) * ss);
}

}  // namespace

void RawMoments::resize(int p) {
  dim = p;
  const std::size_t p2 = static_cast<std::size_t>(p) * p;
  d2.assign(p2, 0.0);
  ss.assign(p2, 0.0);
  d2s.assign(p2 * p, 0.0);
  sss.assign(p2 * p, 0.0);
  d2d2.assign(p2 * p2, 0.0);
  d3s.assign(p2 * p2, 0.0);
  d2ss.assign(p2 * p2, 0.0);
  ssss.assign(p2 * p2, 0.0);
}

namespace {
template <typename Fn>
void zip_tensors(RawMoments& a, const RawMoments& b, Fn fn) {
  auto apply = [&](std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) fn(x[i], y[i]);
  };
  apply(a.d2, b.d2);
  apply(a.ss, b.ss);
  apply(a.d2s, b.d2s);
  apply(a.sss, b.sss);
  apply(a.d2d2, b.d2d2);
  apply(a.d3s, b.d3s);
  apply(a.d2ss, b.d2ss);
  apply(a.ssss, b.ssss);
}
}  // namespace

void RawMoments::add(const RawMoments& other) {
  zip_tensors(*this, other, [](double& x, double y) { x += y; });
}

void RawMoments::sub(const RawMoments& other) {
  zip_tensors(*this, other, [](double& x, double y) { x -= y; });
}

void RawMoments::scale(double factor) {
  zip_tensors(*this, *this, [factor](double& x, double) { x *= factor; });
}

FisherMatrix fisher_matrix(const ModelFamily& family, const ParamPoint& theta) {
  if (!family.in_domain(theta)) {
    throw InvalidInput("fisher_matrix: theta must be interior for " + family.name());
  }
  FisherMatrix f = family.fisher(theta);
  const int p = f.dim;
  const std::size_t p2 = static_cast<std::size_t>(p) * p;
  check_sized(f.g, p2, "metric");
  check_sized(f.g_inv, p2, "inverse metric");

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      g(f.g.data(), p, p), gi(f.g_inv.data(), p, p);
  const Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(g)};
  if (llt.info() != Eigen::Success) {
    throw NumericError("fisher_matrix: metric is not positive definite for " + family.name());
  }
  const double defect = (g * gi - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff();
  if (!(defect < 1e-8)) {
    std::ostringstream msg;
    msg << "fisher_matrix: g * g_inv deviates from identity by " << defect;
    throw NumericError(msg.str());
  }
  return f;
}

LMoments estimate_l_moments(const ModelFamily& family, const ParamPoint& theta,
                            std::int64_t mc_samples, std::uint64_t seed,
                            int workers) {
  if (mc_samples < 1000) {
    throw InvalidInput("estimate_l_moments: need at least 1000 draws");
  }
  if (!family.in_domain(theta)) {
    throw InvalidInput("estimate_l_moments: theta must be interior for " + family.name());
  }
  const int p = family.param_dim();
  LMoments lm;
  lm.dim = p;
  lm.mc_count = mc_samples;
  lm.g = fisher_matrix(family, theta);
  lm.block_sums.resize(kJackknifeBlocks);
  lm.block_counts.resize(kJackknifeBlocks);

  const std::int64_t base = mc_samples / kJackknifeBlocks;
  const std::int64_t rem = mc_samples % kJackknifeBlocks;
  std::vector<std::string> block_errors(kJackknifeBlocks);

  for_each_block(kJackknifeBlocks, resolve_workers(workers), [&](std::int64_t b) {
    try {
      const std::int64_t nb = base + (b < rem ? 1 : 0);
      lm.block_counts[b] = nb;
      RawMoments& sums = lm.block_sums[b];
      sums.resize(p);
      if (nb == 0) return;
      RngStream rng(seed, StreamPurpose::Geometry, static_cast<std::uint64_t>(b));
      ObservationBatch batch;
      family.sample(theta, nb, rng, batch);
      LogDerivs d;
      for (std::int64_t i = 0; i < nb; ++i) {
        const double* x = batch.row(i);
        family.log_derivs(x, theta, 3, d);
        if (!all_finite(d.d1) || !all_finite(d.d2) || !all_finite(d.d3)) {
          std::ostringstream msg;
          msg << "estimate_l_moments: non-finite log-derivative in block " << b
              << " at observation (";
          for (int c = 0; c < batch.obs_dim; ++c) msg << (c ? ", " : "") << x[c];
          msg << ")";
          throw NumericError(msg.str());
        }
        accumulate(sums, d);
      }
    } catch (const std::exception& e) {
      block_errors[b] = e.what();
    }
  });
  for (const std::string& err : block_errors) {
    if (!err.empty()) throw NumericError(err);
  }

  lm.total_sums.resize(p);
  for (const RawMoments& sums : lm.block_sums) lm.total_sums.add(sums);
  lm.raw = lm.total_sums;
  lm.raw.scale(1.0 / static_cast<double>(mc_samples));
  lm.scalars = contract_l_scalars(lm.raw, lm.g);

  const std::vector<RawMoments> loo = leave_one_out_means(lm);
  std::vector<LScalars> reps(loo.size());
  for (std::size_t b = 0; b < loo.size(); ++b) reps[b] = contract_l_scalars(loo[b], lm.g);
  const auto se_of = [&](double LScalars::*field) {
    std::vector<double> vals(reps.size());
    for (std::size_t b = 0; b < reps.size(); ++b) vals[b] = reps[b].*field;
    return se_from_replicates(vals);
  };
  lm.scalar_se.L11 = se_of(&LScalars::L11);
  lm.scalar_se.L12 = se_of(&LScalars::L12);
  lm.scalar_se.L13 = se_of(&LScalars::L13);
  lm.scalar_se.L14 = se_of(&LScalars::L14);
  lm.scalar_se.L15 = se_of(&LScalars::L15);
  lm.scalar_se.L21 = se_of(&LScalars::L21);
  lm.scalar_se.L22 = se_of(&LScalars::L22);
  lm.scalar_se.L23 = se_of(&LScalars::L23);
  lm.scalar_se.L24 = se_of(&LScalars::L24);
  lm.scalar_se.L25 = se_of(&LScalars::L25);
  lm.scalar_se.L26 = se_of(&LScalars::L26);
  return lm;
}

LScalars contract_l_scalars(const RawMoments& m, const FisherMatrix& fm) {
  const int p = m.dim;
  const auto gi = [&](int i, int j) { return fm.g_inv[static_cast<std::size_t>(i) * p + j]; };
  const auto at3 = [&](const std::vector<double>& t, int i, int j, int k) {
    return t[(static_cast<std::size_t>(i) * p + j) * p + k];
  };
  const auto at4 = [&](const std::vector<double>& t, int i, int j, int k, int l) {
    return t[((static_cast<std::size_t>(i) * p + j) * p + k) * p + l];
  };

  LScalars s;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        for (int l = 0; l < p; ++l) {
          const double w = gi(i, j) * gi(k, l);
          s.L11 += w * at4(m.d2ss, i, l, j, k);
          s.L12 += w * at4(m.d2ss, i, j, k, l);
          s.L13 += w * at4(m.ssss, i, j, k, l);
          s.L14 += w * at4(m.d2d2, i, k, j, l);
          s.L15 += w * at4(m.d2d2, i, j, k, l);
        }
      }
    }
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      for (int k = 0; k < p; ++k) {
        for (int a = 0; a < p; ++a) {
          for (int b = 0; b < p; ++b) {
            for (int c = 0; c < p; ++c) {
              const double w = gi(i, a) * gi(j, b) * gi(k, c);
              const double t_abc = at3(m.sss, a, b, c);
              s.L21 += w * at3(m.d2s, i, j, k) * t_abc;
              s.L23 += w * at3(m.sss, i, j, k) * t_abc;
              s.L25 += w * at3(m.d2s, i, j, k) * at3(m.d2s, a, b, c);
            }
          }
        }
      }
    }
  }
  std::vector<double> chris_trace(p, 0.0), skew_trace(p, 0.0);
  for (int t = 0; t < p; ++t) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        chris_trace[t] += gi(i, j) * at3(m.d2s, i, j, t);
        skew_trace[t] += gi(i, j) * at3(m.sss, i, j, t);
      }
    }
  }
  for (int t = 0; t < p; ++t) {
    for (int u = 0; u < p; ++u) {
      const double w = gi(t, u);
      s.L22 += chris_trace[t] * w * skew_trace[u];
      s.L24 += skew_trace[t] * w * skew_trace[u];
      s.L26 += chris_trace[t] * w * chris_trace[u];
    }
  }
  return s;
}

double jackknife_scalar(const LMoments& lm,
                        const std::function<double(const RawMoments&)>& stat) {
  const std::vector<RawMoments> loo = leave_one_out_means(lm);
  std::vector<double> vals(loo.size());
  for (std::size_t b = 0; b < loo.size(); ++b) vals[b] = stat(loo[b]);
  return se_from_replicates(vals);
}

namespace {

/// Derived invariants as plain arithmetic on the contracted scalars.
struct DerivedInvariants {
  double F_alpha, F_e, F_m, TT, TdTd, R, S_ee_c, S_ee_t, S_em_c, S_em_t;
};

DerivedInvariants derive(const LScalars& s, int p, double alpha) {
  const double ap = 0.5 * (1.0 - alpha);
  DerivedInvariants d;
  d.F_e = 2.0 * s.L11 + s.L12 + s.L13 - 2.0 * s.L21 - s.L23 - s.L22;
  d.F_alpha = d.F_e - ap * s.L24;
  d.F_m = d.F_e - s.L24;
  d.TT = s.L23;
  d.TdTd = s.L24;
  d.R = s.L14 - s.L15 + s.L11 - s.L12 - s.L25 + s.L26 + s.L22 - s.L21;
  d.S_ee_c = s.L14 - s.L25 - p;
  d.S_ee_t = s.L15 - s.L26 - static_cast<double>(p) * p;
  d.S_em_c = s.L11 + s.L14 - s.L25 - s.L21;
  d.S_em_t = s.L12 + s.L15 - s.L26 - s.L22;
  return d;
}

}  // namespace

ScalarInvariants invariants_from_scalars(const LScalars& s, int p, double alpha) {
  const DerivedInvariants d = derive(s, p, alpha);
  ScalarInvariants inv;
  inv.alpha = alpha;
  inv.F_alpha = d.F_alpha;
  inv.F_e = d.F_e;
  inv.F_m = d.F_m;
  inv.TT = d.TT;
  inv.TdTd = d.TdTd;
  inv.Rcontract = d.R;
  inv.S_ee_cross = d.S_ee_c;
  inv.S_ee_trace = d.S_ee_t;
  inv.S_em_cross = d.S_em_c;
  inv.S_em_trace = d.S_em_t;
  return inv;
}

ScalarInvariants invariants_from_l_moments(const LMoments& lm, const FisherMatrix& g,
                                           double alpha) {
  if (g.dim != lm.dim) {
    throw InvalidInput("invariants_from_l_moments: metric dimension mismatch");
  }
  const int p = lm.dim;
  ScalarInvariants inv = invariants_from_scalars(contract_l_scalars(lm.raw, g), p, alpha);
  inv.mc_count = lm.mc_count;

  const std::vector<RawMoments> loo = leave_one_out_means(lm);
  std::vector<DerivedInvariants> reps(loo.size());
  for (std::size_t b = 0; b < loo.size(); ++b) {
    reps[b] = derive(contract_l_scalars(loo[b], g), p, alpha);
  }
  const auto se_of = [&](double DerivedInvariants::*field) {
    std::vector<double> vals(reps.size());
    for (std::size_t b = 0; b < reps.size(); ++b) vals[b] = reps[b].*field;
    return se_from_replicates(vals);
  };
  inv.se_F_alpha = se_of(&DerivedInvariants::F_alpha);
  inv.se_F_e = se_of(&DerivedInvariants::F_e);
  inv.se_F_m = se_of(&DerivedInvariants::F_m);
  inv.se_TT = se_of(&DerivedInvariants::TT);
  inv.se_TdTd = se_of(&DerivedInvariants::TdTd);
  inv.se_Rcontract = se_of(&DerivedInvariants::R);
  inv.se_S_ee_cross = se_of(&DerivedInvariants::S_ee_c);
  inv.se_S_ee_trace = se_of(&DerivedInvariants::S_ee_t);
  inv.se_S_em_cross = se_of(&DerivedInvariants::S_em_c);
  inv.se_S_em_trace = se_of(&DerivedInvariants::S_em_t);
  return inv;
}

ScalarInvariants analytic_invariants_multinomial(const std::vector<double>& m_free,
                                                 double alpha) {
  const int p = static_cast<int>(m_free.size());
  if (p < 1) throw InvalidInput("analytic_invariants_multinomial: empty parameter");
  double m0 = 1.0;
  double big_m = 0.0;
  for (double mi : m_free) {
    if (!(mi > 0.0)) {
      throw InvalidInput("analytic_invariants_multinomial: m must be interior");
    }
    m0 -= mi;
    big_m += 1.0 / mi;
  }
  if (!(m0 > 0.0)) {
    throw InvalidInput("analytic_invariants_multinomial: m must be interior");
  }
  big_m += 1.0 / m0;

  ScalarInvariants inv;
  inv.alpha = alpha;
  inv.TT = big_m - 3.0 * p - 1.0;
  inv.TdTd = big_m - static_cast<double>(p + 1) * (p + 1);
  inv.F_m = -big_m + p + 1.0;
  inv.F_e = inv.F_m + inv.TdTd;
  inv.F_alpha = inv.F_e - 0.5 * (1.0 - alpha) * inv.TdTd;
  return inv;
}

ScalarInvariants analytic_invariants_normal(int p, double alpha) {
  if (p < 1) throw InvalidInput("analytic_invariants_normal: p must be >= 1");
  const double pd = p;
  ScalarInvariants inv;
  inv.alpha = alpha;
  inv.TT = pd * pd * pd + 3.0 * pd * pd + 4.0 * pd;
  inv.TdTd = 2.0 * pd * (pd + 1.0) * (pd + 1.0);
  inv.F_m = -pd * (pd + 1.0) * (pd + 1.0);
  inv.F_e = inv.F_m + inv.TdTd;
  inv.F_alpha = inv.F_e - 0.5 * (1.0 - alpha) * inv.TdTd;
  return inv;
}

}  // namespace riskx
