#include "riskx/expansion.hpp"

#include <cmath>
#include <sstream>

#include "riskx/summation.hpp"

namespace riskx {

namespace {

double c2_general_bracket(const ScalarInvariants& v, int p, double a) {
  const double pd = p;
  const double a2 = a * a;
  KahanSum sum;
  sum.add(a2 * 3.0 * v.F_e);
  sum.add(a2 * 3.0 * v.TT);
  sum.add(a2 * -6.0 * v.S_em_cross);
  sum.add(a2 * 6.0 * v.S_ee_cross);
  sum.add(a2 * -3.0 * v.S_em_trace);
  sum.add(a2 * 3.0 * v.S_ee_trace);
  sum.add(a2 * (3.0 * pd * pd + 6.0 * pd));
  sum.add(a * 3.0 * v.F_e);
  sum.add(a * -5.0 * v.TT);
  sum.add(a * -6.0 * v.TdTd);
  sum.add(a * 6.0 * v.S_em_cross);
  sum.add(a * -6.0 * v.S_ee_cross);
  sum.add(a * 3.0 * v.S_em_trace);
  sum.add(a * -3.0 * v.S_ee_trace);
  sum.add(a * -(3.0 * pd * pd + 6.0 * pd));
  sum.add(12.0 * v.S_ee_cross);
  sum.add(-2.0 * v.S_em_cross);
  sum.add(-v.S_em_trace);
  sum.add(v.TT);
  sum.add(9.0 * v.TdTd);
  sum.add(8.0 * v.Rcontract);
  sum.add(-9.0 * v.F_e);
  return sum.value() / 24.0;
}

double c2_exponential_bracket(const ScalarInvariants& v, int p, double a) {
  const double pd = p;
  const double a2 = a * a;
  KahanSum sum;
  sum.add(a2 * 3.0 * v.F_e);
  sum.add(a2 * 3.0 * v.TT);
  sum.add(a2 * (3.0 * pd * pd + 6.0 * pd));
  sum.add(a * 3.0 * v.F_e);
  sum.add(a * -5.0 * v.TT);
  sum.add(a * -6.0 * v.TdTd);
  sum.add(a * -(3.0 * pd * pd + 6.0 * pd));
  sum.add(v.TT);
  sum.add(9.0 * v.TdTd);
  sum.add(-9.0 * v.F_e);
  return sum.value() / 24.0;
}

double c2_mixture_bracket(const ScalarInvariants& v, int p, double a) {
  const double pd = p;
  const double a2 = a * a;
  KahanSum sum;
  sum.add(a2 * 3.0 * v.F_e);
  sum.add(a2 * 3.0 * v.TT);
  sum.add(a2 * 6.0 * v.S_ee_cross);
  sum.add(a2 * 3.0 * v.S_ee_trace);
  sum.add(a2 * (3.0 * pd * pd + 6.0 * pd));
  sum.add(a * 3.0 * v.F_e);
  sum.add(a * -5.0 * v.TT);
  sum.add(a * -6.0 * v.TdTd);
  sum.add(a * -6.0 * v.S_ee_cross);
  sum.add(a * -3.0 * v.S_ee_trace);
  sum.add(a * -(3.0 * pd * pd + 6.0 * pd));
  sum.add(12.0 * v.S_ee_cross);
  sum.add(v.TT);
  sum.add(9.0 * v.TdTd);
  sum.add(-9.0 * v.F_e);
  return sum.value() / 24.0;
}

ExpansionResult make_result(int p, double alpha, double c2, ExpansionMethod method) {
  ExpansionResult r;
  r.c1 = 0.5 * p;
  r.c2 = c2;
  r.alpha = alpha;
  r.alpha_prime = 0.5 * (1.0 - alpha);
  r.method = method;
  return r;
}

void require_vanishing(double value, double se, const char* name, const char* caller) {
  const double tol = std::max(4.0 * se, 1e-9);
  if (std::abs(value) > tol) {
    std::ostringstream msg;
    msg << caller << ": " << name << " = " << value << " exceeds tolerance " << tol
        << "; this family reduction does not apply";
    throw InvalidInput(msg.str());
  }
}

double c2_by_method(const ScalarInvariants& v, int p, double a, ExpansionMethod m) {
  switch (m) {
    case ExpansionMethod::General:
      return c2_general_bracket(v, p, a);
    case ExpansionMethod::ExponentialCorollary:
      return c2_exponential_bracket(v, p, a);
    case ExpansionMethod::MixtureCorollary:
      return c2_mixture_bracket(v, p, a);
    default:
      throw InvalidInput("expansion_from_l_moments: closed forms take parameters, not moments");
  }
}

}  // namespace

std::string to_string(ExpansionMethod method) {
  switch (method) {
    case ExpansionMethod::General:
      return "general";
    case ExpansionMethod::ExponentialCorollary:
      return "exponential-corollary";
    case ExpansionMethod::MixtureCorollary:
      return "mixture-corollary";
    case ExpansionMethod::MultinomialClosed:
      return "multinomial-closed";
    case ExpansionMethod::NormalClosed:
      return "normal-closed";
  }
  return "unknown";
}

ExpansionResult expansion_general(const ScalarInvariants& inv, int p, double alpha) {
  const double a = 0.5 * (1.0 - alpha);
  return make_result(p, alpha, c2_general_bracket(inv, p, a), ExpansionMethod::General);
}

ExpansionResult expansion_exponential_family(const ScalarInvariants& inv, int p,
                                             double alpha) {
  require_vanishing(inv.S_ee_cross, inv.se_S_ee_cross, "S_ee_cross",
                    "expansion_exponential_family");
  require_vanishing(inv.S_ee_trace, inv.se_S_ee_trace, "S_ee_trace",
                    "expansion_exponential_family");
  require_vanishing(inv.S_em_cross, inv.se_S_em_cross, "S_em_cross",
                    "expansion_exponential_family");
  require_vanishing(inv.S_em_trace, inv.se_S_em_trace, "S_em_trace",
                    "expansion_exponential_family");
  require_vanishing(inv.Rcontract, inv.se_Rcontract, "Rcontract",
                    "expansion_exponential_family");
  const double a = 0.5 * (1.0 - alpha);
  return make_result(p, alpha, c2_exponential_bracket(inv, p, a),
                     ExpansionMethod::ExponentialCorollary);
}

ExpansionResult expansion_mixture_family(const ScalarInvariants& inv, int p,
                                         double alpha) {
  require_vanishing(inv.S_em_cross, inv.se_S_em_cross, "S_em_cross",
                    "expansion_mixture_family");
  require_vanishing(inv.S_em_trace, inv.se_S_em_trace, "S_em_trace",
                    "expansion_mixture_family");
  require_vanishing(inv.Rcontract, inv.se_Rcontract, "Rcontract",
                    "expansion_mixture_family");
  const double a = 0.5 * (1.0 - alpha);
  return make_result(p, alpha, c2_mixture_bracket(inv, p, a),
                     ExpansionMethod::MixtureCorollary);
}

ExpansionResult expansion_multinomial_closed(const std::vector<double>& m_free,
                                             double alpha) {
  const int p = static_cast<int>(m_free.size());
  if (p < 1) throw InvalidInput("expansion_multinomial_closed: empty parameter");
  double m0 = 1.0;
  double big_m = 0.0;
  for (double mi : m_free) {
    if (!(mi > 0.0)) throw InvalidInput("expansion_multinomial_closed: m must be interior");
    m0 -= mi;
    big_m += 1.0 / mi;
  }
  if (!(m0 > 0.0)) throw InvalidInput("expansion_multinomial_closed: m must be interior");
  big_m += 1.0 / m0;

  const double c2 =
      ((3.0 + alpha) * (7.0 + 3.0 * alpha) * (big_m - 1.0) -
       6.0 * (alpha + 3.0) * (alpha + 1.0) * p) /
      96.0;
  return make_result(p, alpha, c2, ExpansionMethod::MultinomialClosed);
}

ExpansionResult expansion_normal_closed(int p, double alpha) {
  if (p < 1) throw InvalidInput("expansion_normal_closed: p must be >= 1");
  const double pd = p;
  const double p2 = pd * pd, p3 = p2 * pd, p4 = p3 * pd;
  const double a = 0.5 * (1.0 - alpha);
  const double c2 = (a * a * (3.0 * p4 + 30.0 * p3 + 75.0 * p2 + 72.0 * pd) -
                     a * (3.0 * p4 + 62.0 * p3 + 147.0 * p2 + 128.0 * pd) +
                     40.0 * p3 + 84.0 * p2 + 52.0 * pd) /
                    96.0;
  const int d = p * (p + 1) / 2;
  return make_result(d, alpha, c2, ExpansionMethod::NormalClosed);
}

SpecialAlphaResults special_alpha_reductions(const ScalarInvariants& inv, int p) {
  const double pd = p;
  SpecialAlphaResults out;

  {
    KahanSum sum;
    sum.add(-3.0 * inv.F_e);
    sum.add(-inv.TT);
    sum.add(3.0 * inv.TdTd);
    sum.add(12.0 * inv.S_ee_cross);
    sum.add(-2.0 * inv.S_em_cross);
    sum.add(-inv.S_em_trace);
    sum.add(8.0 * inv.Rcontract);
    out.kl = make_result(p, -1.0, sum.value() / 24.0, ExpansionMethod::General);
  }
  {
    KahanSum sum;
    sum.add(-27.0 / 4.0 * inv.F_e);
    sum.add(-3.0 / 4.0 * inv.TT);
    sum.add(6.0 * inv.TdTd);
    sum.add(21.0 / 2.0 * inv.S_ee_cross);
    sum.add(-3.0 / 4.0 * inv.S_ee_trace);
    sum.add(-1.0 / 2.0 * inv.S_em_cross);
    sum.add(-1.0 / 4.0 * inv.S_em_trace);
    sum.add(8.0 * inv.Rcontract);
    sum.add(-3.0 / 4.0 * pd * pd);
    sum.add(-3.0 / 2.0 * pd);
    out.hellinger = make_result(p, 0.0, sum.value() / 24.0, ExpansionMethod::General);
  }
  {
    KahanSum sum;
    sum.add(9.0 * inv.F_e);
    sum.add(3.0 * inv.TT);
    sum.add(-3.0 * inv.TdTd);
    sum.add(24.0 * inv.S_ee_cross);
    sum.add(6.0 * inv.S_ee_trace);
    sum.add(-14.0 * inv.S_em_cross);
    sum.add(-7.0 * inv.S_em_trace);
    sum.add(8.0 * inv.Rcontract);
    sum.add(6.0 * pd * pd);
    sum.add(12.0 * pd);
    out.chisq = make_result(p, -3.0, sum.value() / 24.0, ExpansionMethod::General);
  }
  return out;
}

ExpansionResult expansion_from_l_moments(const LMoments& lm, const FisherMatrix& g,
                                         double alpha, ExpansionMethod method) {
  const int p = lm.dim;
  const ScalarInvariants inv = invariants_from_l_moments(lm, g, alpha);
  ExpansionResult result;
  switch (method) {
    case ExpansionMethod::General:
      result = expansion_general(inv, p, alpha);
      break;
    case ExpansionMethod::ExponentialCorollary:
      result = expansion_exponential_family(inv, p, alpha);
      break;
    case ExpansionMethod::MixtureCorollary:
      result = expansion_mixture_family(inv, p, alpha);
      break;
    default:
      throw InvalidInput("expansion_from_l_moments: closed forms take parameters, not moments");
  }
  const double a = 0.5 * (1.0 - alpha);
  result.se_c2 = jackknife_scalar(lm, [&](const RawMoments& means) {
    const ScalarInvariants rep =
        invariants_from_scalars(contract_l_scalars(means, g), p, alpha);
    return c2_by_method(rep, p, a, method);
  });
  return result;
}

}  // namespace riskx
