#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "riskx/expansion.hpp"
#include "riskx/geometry.hpp"
#include "riskx/models/multinomial.hpp"
#include "riskx/rng.hpp"

using riskx::ExpansionMethod;
using riskx::ExpansionResult;
using riskx::ScalarInvariants;
using riskx::expansion_exponential_family;
using riskx::expansion_general;
using riskx::expansion_mixture_family;
using riskx::expansion_multinomial_closed;
using riskx::expansion_normal_closed;
using riskx::RngStream;
using riskx::StreamPurpose;

namespace {

std::vector<double> random_interior(int p, RngStream& rng) {
  while (true) {
    std::vector<double> m(p);
    double total = 0.0;
    for (double& v : m) {
      v = 0.02 + 0.96 * rng.uniform();
      total += v;
    }
    if (total < 0.95) return m;
  }
}

ScalarInvariants random_invariants(RngStream& rng) {
  ScalarInvariants inv;
  const auto draw = [&] { return -2.0 + 4.0 * rng.uniform(); };
  inv.F_e = draw();
  inv.TT = draw();
  inv.TdTd = draw();
  inv.Rcontract = draw();
  inv.S_ee_cross = draw();
  inv.S_ee_trace = draw();
  inv.S_em_cross = draw();
  inv.S_em_trace = draw();
  inv.F_m = inv.F_e - inv.TdTd;
  return inv;
}

}  // namespace

// ============================================================================
// Multinomial closed form
// ============================================================================

TEST_CASE("multinomial closed form reproduces the reference risk table") {
  // KL risk (alpha = -1) of the binomial MLE at n = 10, rounded to 4
  // decimals, over the classical m grid.
  const struct {
    double m1;
    double expected;
  } table[] = {{0.5, 0.0525},  {0.4, 0.0526},  {0.3, 0.0531}, {0.2, 0.0544},
               {0.1, 0.0584},  {0.01, 0.1333}, {0.001, 0.8833}};
  for (const auto& row : table) {
    const ExpansionResult r = expansion_multinomial_closed({row.m1}, -1.0);
    CHECK(r.c1 == 0.5);
    CHECK(r.value(10.0) == doctest::Approx(row.expected).epsilon(5e-3));
    CHECK(std::abs(r.value(10.0) - row.expected) < 5e-5);  // 4-decimal match
  }
}

TEST_CASE("multinomial closed form spot values") {
  {
    // m = 0.3: c2 = (M-1)/12 = 158/504 with M = 1/0.7 + 1/0.3.
    const ExpansionResult r = expansion_multinomial_closed({0.3}, -1.0);
    CHECK(r.c2 == doctest::Approx(158.0 / 504.0).epsilon(1e-12));
  }
  {
    // Hellinger at m = 0.3: (21(M-1) - 18)/96 = 61/96.
    const ExpansionResult r = expansion_multinomial_closed({0.3}, 0.0);
    CHECK(r.c2 == doctest::Approx(61.0 / 96.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(expansion_multinomial_closed({0.5, 0.5}, -1.0),
                  riskx::InvalidInput);
}

TEST_CASE("chi-square risk of the multinomial MLE has no n^-2 term") {
  RngStream rng(61, StreamPurpose::Oracle, 70);
  for (int p : {1, 2, 3}) {
    for (int rep = 0; rep < 17; ++rep) {
      const auto m = random_interior(p, rng);
      const ExpansionResult r = expansion_multinomial_closed(m, -3.0);
      CHECK(std::abs(r.c2) < 1e-12);
      CHECK(r.value(50.0) == doctest::Approx(0.5 * p / 50.0).epsilon(1e-12));
    }
  }
}

// ============================================================================
// Normal closed form
// ============================================================================

TEST_CASE("normal closed form reproduces the reference risk table") {
  // KL risk (alpha = -1) for p = 10: c1 = 27.5, c2 = 2290/24.
  const struct {
    double n;
    double expected;
  } table[] = {{100, 0.2845}, {200, 0.1399}, {300, 0.0927}, {400, 0.0693},
               {500, 0.0554}, {800, 0.0345}, {1000, 0.0276}};
  const ExpansionResult r = expansion_normal_closed(10, -1.0);
  CHECK(r.c1 == doctest::Approx(27.5).epsilon(1e-12));
  CHECK(r.c2 == doctest::Approx(2290.0 / 24.0).epsilon(1e-12));
  for (const auto& row : table) {
    CHECK(std::abs(r.value(row.n) - row.expected) < 5e-5);
  }
}

TEST_CASE("normal closed form spot values across alpha") {
  // alpha = -1 collapses to (2p^3 + 3p^2 - p)/24 for every p.
  for (int p : {1, 2, 3, 10}) {
    const double pd = p;
    const ExpansionResult r = expansion_normal_closed(p, -1.0);
    CHECK(r.c1 == doctest::Approx(pd * (pd + 1) / 4.0).epsilon(1e-12));
    CHECK(r.c2 ==
          doctest::Approx((2 * pd * pd * pd + 3 * pd * pd - pd) / 24.0).epsilon(1e-12));
  }
  // Hellinger, p = 1: 17/32. A cubic in p cannot fit this family for p >= 2;
  // the dimension count d = p(p+1)/2 makes the d^2 blocks quartic in p.
  CHECK(expansion_normal_closed(1, 0.0).c2 == doctest::Approx(17.0 / 32.0).epsilon(1e-12));
  // Hellinger, p = 2: (-16 + 176 + 156 + 16)/128 = 2.59375.
  CHECK(expansion_normal_closed(2, 0.0).c2 == doctest::Approx(2.59375).epsilon(1e-12));
  // chi-square (alpha = -3), p = 10: (p^4 + 6p^3 + 15p^2 + 14p)/16 = 1102.5,
  // so the n = 500 risk is 0.055 + 1102.5/250000 = 0.059410.
  const ExpansionResult chi = expansion_normal_closed(10, -3.0);
  CHECK(chi.c2 == doctest::Approx(1102.5).epsilon(1e-12));
  CHECK(chi.value(500.0) == doctest::Approx(0.059410).epsilon(1e-5));
  CHECK_THROWS_AS(expansion_normal_closed(0, -1.0), riskx::InvalidInput);
}

// ============================================================================
// General bracket and its reductions
// ============================================================================

TEST_CASE("zero geometry reduces to (p^2 + 2p)(a'^2 - a')/8") {
  ScalarInvariants zero;
  for (int p : {1, 2, 5}) {
    for (double alpha : {-3.0, -1.0, 0.0, 1.0}) {
      const double ap = 0.5 * (1.0 - alpha);
      const ExpansionResult r = expansion_general(zero, p, alpha);
      const double expected = (p * p + 2.0 * p) * (ap * ap - ap) / 8.0;
      CHECK(r.c2 == doctest::Approx(expected).epsilon(1e-12));
      CHECK(r.c1 == doctest::Approx(0.5 * p).epsilon(1e-12));
    }
  }
  // p = 1 special cases: alpha = -1 gives 0, alpha = -3 gives (3/8)(4-2).
  CHECK(expansion_general(zero, 1, -1.0).c2 == doctest::Approx(0.0));
  CHECK(expansion_general(zero, 1, -3.0).c2 == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("closed forms agree with the general bracket on analytic invariants") {
  RngStream rng(62, StreamPurpose::Oracle, 71);
  const double alphas[] = {-3.0, -2.0, -1.0, 0.0, 1.0};

  for (int p : {1, 2, 3}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto m = random_interior(p, rng);
      for (double alpha : alphas) {
        const ScalarInvariants inv =
            riskx::analytic_invariants_multinomial(m, alpha);
        const double general = expansion_general(inv, p, alpha).c2;
        const double closed = expansion_multinomial_closed(m, alpha).c2;
        CHECK(std::abs(general - closed) <= 1e-10 * std::max(1.0, std::abs(closed)));
      }
    }
  }

  for (int p : {1, 2, 3}) {
    const int d = p * (p + 1) / 2;
    for (double alpha : alphas) {
      const ScalarInvariants inv = riskx::analytic_invariants_normal(p, alpha);
      const double general = expansion_general(inv, d, alpha).c2;
      const double closed = expansion_normal_closed(p, alpha).c2;
      CHECK(std::abs(general - closed) <= 1e-10 * std::max(1.0, std::abs(closed)));
    }
  }
}

TEST_CASE("special alpha reductions equal the general bracket") {
  RngStream rng(63, StreamPurpose::Oracle, 72);
  for (int p : {1, 2, 4}) {
    for (int rep = 0; rep < 25; ++rep) {
      const ScalarInvariants inv = random_invariants(rng);
      const riskx::SpecialAlphaResults s = riskx::special_alpha_reductions(inv, p);
      CHECK(s.kl.alpha == -1.0);
      CHECK(s.hellinger.alpha == 0.0);
      CHECK(s.chisq.alpha == -3.0);
      const double tol = 1e-12;
      CHECK(std::abs(s.kl.c2 - expansion_general(inv, p, -1.0).c2) <=
            tol * std::max(1.0, std::abs(s.kl.c2)));
      CHECK(std::abs(s.hellinger.c2 - expansion_general(inv, p, 0.0).c2) <=
            tol * std::max(1.0, std::abs(s.hellinger.c2)));
      CHECK(std::abs(s.chisq.c2 - expansion_general(inv, p, -3.0).c2) <=
            tol * std::max(1.0, std::abs(s.chisq.c2)));
    }
  }
}

TEST_CASE("exponential-family corollary") {
  RngStream rng(64, StreamPurpose::Oracle, 73);
  // With S = R = 0 the corollary must reproduce the general bracket.
  for (int rep = 0; rep < 25; ++rep) {
    ScalarInvariants inv = random_invariants(rng);
    inv.S_ee_cross = inv.S_ee_trace = 0.0;
    inv.S_em_cross = inv.S_em_trace = 0.0;
    inv.Rcontract = 0.0;
    const double alpha = -3.0 + 4.0 * rng.uniform();
    const int p = 1 + static_cast<int>(3.0 * rng.uniform());
    const double a = expansion_exponential_family(inv, p, alpha).c2;
    const double b = expansion_general(inv, p, alpha).c2;
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
  }
  // Normal p = 1, Hellinger: TT = 8, TdTd = 8, F_e = 4 gives 17/32.
  const ScalarInvariants normal1 = riskx::analytic_invariants_normal(1, 0.0);
  CHECK(expansion_exponential_family(normal1, 1, 0.0).c2 ==
        doctest::Approx(17.0 / 32.0).epsilon(1e-12));
  // Multinomial m = 0.5, alpha = -3: the corollary also yields zero.
  const ScalarInvariants half = riskx::analytic_invariants_multinomial({0.5}, -3.0);
  CHECK(std::abs(expansion_exponential_family(half, 1, -3.0).c2) < 1e-12);
  // Non-vanishing S is a contract violation.
  ScalarInvariants bad;
  bad.S_ee_cross = 0.5;
  CHECK_THROWS_AS(expansion_exponential_family(bad, 1, -1.0), riskx::InvalidInput);
}

TEST_CASE("mixture-family corollary") {
  RngStream rng(65, StreamPurpose::Oracle, 74);
  // Keeps the e-embedding curvature terms S_ee; drops S_em and R, which
  // vanish identically for a mixture family (l_(ij) = -l_i l_j pointwise).
  for (int rep = 0; rep < 25; ++rep) {
    ScalarInvariants inv = random_invariants(rng);
    inv.S_em_cross = inv.S_em_trace = 0.0;
    inv.Rcontract = 0.0;
    const double alpha = -3.0 + 4.0 * rng.uniform();
    const int p = 1 + static_cast<int>(3.0 * rng.uniform());
    const double a = expansion_mixture_family(inv, p, alpha).c2;
    const double b = expansion_general(inv, p, alpha).c2;
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)));
  }
  ScalarInvariants bad;
  bad.S_em_cross = 0.3;
  CHECK_THROWS_AS(expansion_mixture_family(bad, 1, -1.0), riskx::InvalidInput);
}

// ============================================================================
// Structural properties
// ============================================================================

TEST_CASE("c2 is exactly quadratic in alpha-prime") {
  RngStream rng(66, StreamPurpose::Oracle, 75);
  for (int rep = 0; rep < 10; ++rep) {
    const ScalarInvariants inv = random_invariants(rng);
    const int p = 2;
    // Sample the bracket at a' = 0, 1, 2 (alpha = 1, -1, -3) and rebuild by
    // Lagrange interpolation at an off-grid point.
    const double c0 = expansion_general(inv, p, 1.0).c2;
    const double c1 = expansion_general(inv, p, -1.0).c2;
    const double c2 = expansion_general(inv, p, -3.0).c2;
    const double x = 0.37 + rng.uniform();
    const double interp = c0 * (x - 1) * (x - 2) / 2.0 - c1 * x * (x - 2) +
                          c2 * x * (x - 1) / 2.0;
    const double direct = expansion_general(inv, p, 1.0 - 2.0 * x).c2;
    CHECK(std::abs(interp - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
  }
}

TEST_CASE("multinomial c2 increases with M when (3+a)(7+3a) > 0") {
  for (double alpha : {-1.0, 0.0, 0.5}) {
    double last = -1e300;
    for (double m1 : {0.5, 0.3, 0.2, 0.1, 0.05, 0.01}) {
      // Decreasing m1 away from 1/2 strictly increases M = 1/m0 + 1/m1.
      const double c2 = expansion_multinomial_closed({m1}, alpha).c2;
      CHECK(c2 > last);
      last = c2;
    }
  }
  // Equi-probable point minimizes c2 over the simplex.
  RngStream rng(67, StreamPurpose::Oracle, 76);
  const double at_equi =
      expansion_multinomial_closed({1.0 / 3.0, 1.0 / 3.0}, -1.0).c2;
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = random_interior(2, rng);
    CHECK(expansion_multinomial_closed(m, -1.0).c2 >= at_equi - 1e-12);
  }
}

TEST_CASE("value() assembles c1/n + c2/n^2") {
  const ExpansionResult r = expansion_multinomial_closed({0.3}, -1.0);
  for (double n : {1.0, 10.0, 123.0}) {
    CHECK(r.value(n) == doctest::Approx(r.c1 / n + r.c2 / (n * n)).epsilon(1e-15));
  }
}

TEST_CASE("method names for reporting") {
  CHECK(riskx::to_string(ExpansionMethod::General) == std::string("general"));
  CHECK(riskx::to_string(ExpansionMethod::ExponentialCorollary) ==
        std::string("exponential-corollary"));
  CHECK(riskx::to_string(ExpansionMethod::MixtureCorollary) ==
        std::string("mixture-corollary"));
  CHECK(riskx::to_string(ExpansionMethod::MultinomialClosed) ==
        std::string("multinomial-closed"));
  CHECK(riskx::to_string(ExpansionMethod::NormalClosed) ==
        std::string("normal-closed"));
}

// ============================================================================
// Monte-Carlo pathway
// ============================================================================

TEST_CASE("expansion_from_l_moments matches the closed form within error") {
  riskx::MultinomialModel model(1);
  riskx::ParamPoint theta;
  theta.coords = {0.3};
  const riskx::LMoments lm = riskx::estimate_l_moments(model, theta, 100000, 31415);
  const ExpansionResult r = riskx::expansion_from_l_moments(
      lm, lm.g, -1.0, ExpansionMethod::ExponentialCorollary);
  CHECK(r.se_c2 > 0.0);
  CHECK(std::abs(r.c2 - 158.0 / 504.0) <= 4.0 * r.se_c2);
  CHECK(r.method == ExpansionMethod::ExponentialCorollary);
  CHECK(r.c1 == 0.5);

  // The general pathway keeps the noisy S and R estimates (the corollary
  // zeroes them after checking they vanish), so the two point estimates
  // differ at Monte-Carlo noise level while both track the closed form.
  const ExpansionResult g =
      riskx::expansion_from_l_moments(lm, lm.g, -1.0, ExpansionMethod::General);
  CHECK(std::abs(g.c2 - 158.0 / 504.0) <= 4.0 * g.se_c2);
  CHECK(std::abs(g.c2 - r.c2) <= 4.0 * (g.se_c2 + r.se_c2));

  // Closed forms need parameters, not moments: reject the dispatch.
  CHECK_THROWS_AS(riskx::expansion_from_l_moments(lm, lm.g, -1.0,
                                                  ExpansionMethod::MultinomialClosed),
                  riskx::InvalidInput);
}
