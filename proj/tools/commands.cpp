#include "commands.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskx/contraction.hpp"
#include "riskx/errors.hpp"
#include "riskx/expansion.hpp"
#include "riskx/geometry.hpp"
#include "riskx/models/multinomial.hpp"
#include "riskx/models/two_normal_mixture.hpp"
#include "riskx/models/zero_mean_normal.hpp"
#include "riskx/parallel.hpp"
#include "riskx/simulation.hpp"

namespace {

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

struct Cell {
  enum class Kind { Number, Integer, Text, Missing };
  Kind kind = Kind::Missing;
  double number = 0.0;
  long long integer = 0;
  std::string text;
};

Cell cell(double v) {
  Cell c;
  c.kind = Cell::Kind::Number;
  c.number = v;
  return c;
}

Cell cell(std::int64_t v) {
  Cell c;
  c.kind = Cell::Kind::Integer;
  c.integer = v;
  return c;
}

Cell cell(std::string v) {
  Cell c;
  c.kind = Cell::Kind::Text;
  c.text = std::move(v);
  return c;
}

Cell missing() { return Cell{}; }

using Row = std::vector<std::pair<std::string, Cell>>;

std::string format_number(double v, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

/// Emits rows as CSV (header + comma-separated lines, '-' for unavailable
/// cells) or as JSON lines with keys matching the CSV headers.
void write_rows(const std::vector<Row>& rows, const std::string& format, int precision,
                std::ostream& out) {
  if (rows.empty()) return;
  if (format == "jsonl") {
    for (const Row& row : rows) {
      nlohmann::json obj;
      for (const auto& [key, c] : row) {
        switch (c.kind) {
          case Cell::Kind::Number:
            obj[key] = c.number;
            break;
          case Cell::Kind::Integer:
            obj[key] = c.integer;
            break;
          case Cell::Kind::Text:
            obj[key] = c.text;
            break;
          case Cell::Kind::Missing:
            obj[key] = nullptr;
            break;
        }
      }
      out << obj.dump() << "\n";
    }
    return;
  }
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    out << (i ? "," : "") << rows[0][i].first;
  }
  out << "\n";
  for (const Row& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i].second;
      if (i) out << ",";
      switch (c.kind) {
        case Cell::Kind::Number:
          out << format_number(c.number, precision);
          break;
        case Cell::Kind::Integer:
          out << c.integer;
          break;
        case Cell::Kind::Text:
          out << c.text;
          break;
        case Cell::Kind::Missing:
          out << "-";
          break;
      }
    }
    out << "\n";
  }
}

std::string join_values(const std::vector<double>& v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

// ---------------------------------------------------------------------------
// Model selection shared by expand / geometry / simulate
// ---------------------------------------------------------------------------

struct ModelOptions {
  std::string model;
  std::vector<double> probs;   // multinomial free coordinates
  int dim = 1;                 // normal matrix dimension
  std::vector<double> sigma;   // normal covariance, packed upper triangle
  double sigma2 = 0.25;        // mixture component variance
  std::vector<double> theta1;  // mixture weights to sweep
};

void add_model_options(CLI::App* cmd, ModelOptions& mo) {
  cmd->add_option("--model", mo.model, "Family: multinomial, normal, or mixture")
      ->required()
      ->check(CLI::IsMember({"multinomial", "normal", "mixture"}));
  cmd->add_option("--probs", mo.probs,
                  "Multinomial free probabilities m_1 ... m_p (m_0 = 1 - sum)");
  cmd->add_option("--dim", mo.dim, "Normal family: matrix dimension p")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sigma", mo.sigma,
                  "Normal family: covariance as packed upper triangle (default identity)");
  cmd->add_option("--sigma2", mo.sigma2, "Mixture family: component variance")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--theta1", mo.theta1,
                  "Mixture family: weight(s) of the unit-mean component (default 0.5)");
}

struct ModelBundle {
  std::unique_ptr<riskx::ModelFamily> family;
  std::vector<riskx::ParamPoint> points;
  std::vector<std::string> labels;
  int param_count = 0;
};

ModelBundle build_model(const ModelOptions& mo) {
  ModelBundle b;
  if (mo.model == "multinomial") {
    if (mo.probs.empty()) {
      throw riskx::InvalidInput("the multinomial model needs --probs");
    }
    auto family = std::make_unique<riskx::MultinomialModel>(
        static_cast<int>(mo.probs.size()));
    riskx::ParamPoint pt;
    pt.coords = mo.probs;
    if (!family->in_domain(pt)) {
      throw riskx::InvalidInput("--probs must be interior: every m_i > 0, sum < 1");
    }
    b.param_count = static_cast<int>(mo.probs.size());
    b.points.push_back(std::move(pt));
    b.labels.push_back("m=" + join_values(mo.probs));
    b.family = std::move(family);
  } else if (mo.model == "normal") {
    const int p = mo.dim;
    auto family = std::make_unique<riskx::ZeroMeanNormalModel>(p);
    riskx::ParamPoint pt;
    std::string label;
    if (mo.sigma.empty()) {
      std::vector<double> ident(static_cast<std::size_t>(p) * p, 0.0);
      for (int i = 0; i < p; ++i) ident[static_cast<std::size_t>(i) * p + i] = 1.0;
      pt = riskx::ZeroMeanNormalModel::from_matrix(ident, p);
      label = "p=" + std::to_string(p) + " sigma=I";
    } else {
      pt.coords = mo.sigma;
      label = "p=" + std::to_string(p) + " sigma=" + join_values(mo.sigma);
    }
    if (!family->in_domain(pt)) {
      throw riskx::InvalidInput("--sigma must be a positive-definite upper triangle of --dim");
    }
    b.param_count = p * (p + 1) / 2;
    b.points.push_back(std::move(pt));
    b.labels.push_back(std::move(label));
    b.family = std::move(family);
  } else {
    auto family = std::make_unique<riskx::TwoNormalMixtureModel>(mo.sigma2);
    std::vector<double> grid = mo.theta1.empty() ? std::vector<double>{0.5} : mo.theta1;
    for (double t : grid) {
      riskx::ParamPoint pt;
      pt.coords = {t};
      if (!family->in_domain(pt)) {
        throw riskx::InvalidInput("--theta1 values must lie strictly inside (0,1)");
      }
      std::ostringstream label;
      label << std::setprecision(6) << "sigma2=" << mo.sigma2 << " theta1=" << t;
      b.points.push_back(std::move(pt));
      b.labels.push_back(label.str());
    }
    b.param_count = 1;
    b.family = std::move(family);
  }
  return b;
}

riskx::ExpansionMethod parse_method(const std::string& name, const std::string& model) {
  using riskx::ExpansionMethod;
  if (name == "auto") {
    if (model == "multinomial") return ExpansionMethod::MultinomialClosed;
    if (model == "normal") return ExpansionMethod::NormalClosed;
    return ExpansionMethod::MixtureCorollary;
  }
  if (name == "general") return ExpansionMethod::General;
  if (name == "exponential-corollary") return ExpansionMethod::ExponentialCorollary;
  if (name == "mixture-corollary") return ExpansionMethod::MixtureCorollary;
  if (name == "multinomial-closed") return ExpansionMethod::MultinomialClosed;
  if (name == "normal-closed") return ExpansionMethod::NormalClosed;
  throw riskx::InvalidInput("unknown --method: " + name);
}

// ---------------------------------------------------------------------------
// Subcommand option bags
// ---------------------------------------------------------------------------

struct GlobalOptions {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string format;  // empty = csv for tables, plain line for loops
  int precision = 6;
  std::string output;
};

struct ExpandOptions {
  ModelOptions model;
  std::vector<double> alphas{-1.0};
  std::vector<std::int64_t> ns;
  std::string method = "auto";
  std::int64_t mc_samples = 100000;
};

struct GeometryOptions {
  ModelOptions model;
  double alpha = -1.0;
  std::string source = "auto";  // analytic | mc | both
  std::int64_t mc_samples = 100000;
  std::vector<std::int64_t> ns;
};

struct SimulateOptions {
  ModelOptions model;
  double alpha = -1.0;
  std::vector<std::int64_t> ns;
  std::int64_t reps = 100000;
  std::string policy = "count-and-exclude";
  std::vector<double> sigma_b;  // normal: run the invariance comparison
  std::int64_t mc_samples = 100000;
};

struct LoopsOptions {
  std::string pattern;
  std::string upper, lower;
  std::string swaps_upper, swaps_lower;
  int norm_log2 = 0;
};

std::vector<riskx::Segment> parse_segments(const std::string& text, const char* what) {
  std::vector<riskx::Segment> segments;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      throw riskx::InvalidInput(std::string(what) + ": expected pairs like 1-2,3-4");
    }
    try {
      riskx::Segment s;
      s.a = std::stoi(item.substr(0, dash));
      s.b = std::stoi(item.substr(dash + 1));
      segments.push_back(s);
    } catch (const std::exception&) {
      throw riskx::InvalidInput(std::string(what) + ": could not parse '" + item + "'");
    }
  }
  if (segments.empty()) {
    throw riskx::InvalidInput(std::string(what) + ": no segments given");
  }
  return segments;
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

void run_expand(const GlobalOptions& g, const ExpandOptions& opt, std::ostream& out) {
  if (opt.ns.empty()) throw riskx::InvalidInput("expand: give at least one --n");
  for (std::int64_t n : opt.ns) {
    if (n < 1) throw riskx::InvalidInput("expand: --n must be positive");
  }
  ModelBundle bundle = build_model(opt.model);
  const riskx::ExpansionMethod method = parse_method(opt.method, opt.model.model);
  using riskx::ExpansionMethod;
  if (method == ExpansionMethod::MultinomialClosed && opt.model.model != "multinomial") {
    throw riskx::InvalidInput("--method multinomial-closed needs --model multinomial");
  }
  if (method == ExpansionMethod::NormalClosed && opt.model.model != "normal") {
    throw riskx::InvalidInput("--method normal-closed needs --model normal");
  }
  if (method == ExpansionMethod::MixtureCorollary && opt.model.model != "mixture") {
    throw riskx::InvalidInput("--method mixture-corollary needs --model mixture");
  }
  if (method == ExpansionMethod::ExponentialCorollary && opt.model.model == "mixture") {
    throw riskx::InvalidInput("the mixture family is not exponential; use mixture-corollary");
  }

  std::vector<Row> rows;
  for (std::size_t idx = 0; idx < bundle.points.size(); ++idx) {
    // One L-moment estimation per point serves every (alpha, n) cell.
    std::optional<riskx::LMoments> lm;
    if (opt.model.model == "mixture") {
      lm = riskx::estimate_l_moments(*bundle.family, bundle.points[idx], opt.mc_samples,
                                     g.seed, g.workers);
    }
    for (double alpha : opt.alphas) {
      riskx::ExpansionResult r;
      switch (method) {
        case ExpansionMethod::MultinomialClosed:
          r = riskx::expansion_multinomial_closed(opt.model.probs, alpha);
          break;
        case ExpansionMethod::NormalClosed:
          r = riskx::expansion_normal_closed(opt.model.dim, alpha);
          break;
        case ExpansionMethod::MixtureCorollary:
        case ExpansionMethod::General:
          if (lm.has_value()) {
            r = riskx::expansion_from_l_moments(*lm, lm->g, alpha, method);
            break;
          }
          [[fallthrough]];
        case ExpansionMethod::ExponentialCorollary: {
          const riskx::ScalarInvariants inv =
              opt.model.model == "multinomial"
                  ? riskx::analytic_invariants_multinomial(opt.model.probs, alpha)
                  : riskx::analytic_invariants_normal(opt.model.dim, alpha);
          r = method == ExpansionMethod::General
                  ? riskx::expansion_general(inv, bundle.param_count, alpha)
                  : riskx::expansion_exponential_family(inv, bundle.param_count, alpha);
          break;
        }
      }
      for (std::int64_t n : opt.ns) {
        rows.push_back(Row{
            {"model", cell(opt.model.model)},
            {"theta", cell(bundle.labels[idx])},
            {"alpha", cell(alpha)},
            {"n", cell(n)},
            {"c1", cell(r.c1)},
            {"c2", cell(r.c2)},
            {"se_c2", lm.has_value() ? cell(r.se_c2) : missing()},
            {"value", cell(r.value(static_cast<double>(n)))},
            {"method", cell(riskx::to_string(r.method))},
        });
      }
    }
  }
  write_rows(rows, g.format.empty() ? "csv" : g.format, g.precision, out);
}

void run_geometry(const GlobalOptions& g, const GeometryOptions& opt, std::ostream& out) {
  ModelBundle bundle = build_model(opt.model);
  std::vector<std::string> sources;
  if (opt.source == "auto") {
    sources.push_back(opt.model.model == "mixture" ? "mc" : "analytic");
  } else if (opt.source == "both") {
    sources = {"analytic", "mc"};
  } else {
    sources.push_back(opt.source);
  }
  const std::vector<std::int64_t>& ns = opt.ns;

  std::vector<Row> rows;
  for (std::size_t idx = 0; idx < bundle.points.size(); ++idx) {
    for (const std::string& source : sources) {
      riskx::ScalarInvariants inv;
      std::optional<riskx::LMoments> lm;
      std::optional<riskx::ExpansionResult> expansion;
      if (source == "analytic") {
        if (opt.model.model == "multinomial") {
          inv = riskx::analytic_invariants_multinomial(opt.model.probs, opt.alpha);
        } else if (opt.model.model == "normal") {
          inv = riskx::analytic_invariants_normal(opt.model.dim, opt.alpha);
        } else {
          throw riskx::InvalidInput(
              "the mixture family has no closed-form invariants; use --source mc");
        }
        if (!ns.empty()) {
          expansion = riskx::expansion_general(inv, bundle.param_count, opt.alpha);
        }
      } else {
        lm = riskx::estimate_l_moments(*bundle.family, bundle.points[idx],
                                       opt.mc_samples, g.seed, g.workers);
        inv = riskx::invariants_from_l_moments(*lm, lm->g, opt.alpha);
        if (!ns.empty()) {
          expansion = riskx::expansion_from_l_moments(
              *lm, lm->g, opt.alpha,
              opt.model.model == "mixture" ? riskx::ExpansionMethod::MixtureCorollary
                                           : riskx::ExpansionMethod::ExponentialCorollary);
        }
      }

      const bool mc = lm.has_value();
      const auto stat = [&](double value, double se) {
        return std::vector<Cell>{cell(value), mc ? cell(se) : missing()};
      };
      const auto base_row = [&]() {
        Row row{
            {"model", cell(opt.model.model)},
            {"theta", cell(bundle.labels[idx])},
            {"source", cell(source)},
            {"alpha", cell(opt.alpha)},
            {"mc_samples", mc ? cell(inv.mc_count) : missing()},
        };
        const auto push = [&](const char* name, const std::vector<Cell>& pair) {
          row.emplace_back(name, pair[0]);
          row.emplace_back(std::string("se_") + name, pair[1]);
        };
        push("F_e", stat(inv.F_e, inv.se_F_e));
        push("F_m", stat(inv.F_m, inv.se_F_m));
        push("F_alpha", stat(inv.F_alpha, inv.se_F_alpha));
        push("TT", stat(inv.TT, inv.se_TT));
        push("TdTd", stat(inv.TdTd, inv.se_TdTd));
        push("R", stat(inv.Rcontract, inv.se_Rcontract));
        push("S_ee_cross", stat(inv.S_ee_cross, inv.se_S_ee_cross));
        push("S_ee_trace", stat(inv.S_ee_trace, inv.se_S_ee_trace));
        push("S_em_cross", stat(inv.S_em_cross, inv.se_S_em_cross));
        push("S_em_trace", stat(inv.S_em_trace, inv.se_S_em_trace));
        return row;
      };

      if (ns.empty()) {
        Row row = base_row();
        row.emplace_back("n", missing());
        row.emplace_back("c1", missing());
        row.emplace_back("c2", missing());
        row.emplace_back("se_c2", missing());
        row.emplace_back("value", missing());
        rows.push_back(std::move(row));
      } else {
        for (std::int64_t n : ns) {
          Row row = base_row();
          row.emplace_back("n", cell(n));
          row.emplace_back("c1", cell(expansion->c1));
          row.emplace_back("c2", cell(expansion->c2));
          row.emplace_back("se_c2", mc ? cell(expansion->se_c2) : missing());
          row.emplace_back("value", cell(expansion->value(static_cast<double>(n))));
          rows.push_back(std::move(row));
        }
      }
    }
  }
  write_rows(rows, g.format.empty() ? "csv" : g.format, g.precision, out);
}

void run_simulate(const GlobalOptions& g, const SimulateOptions& opt, std::ostream& out) {
  if (opt.ns.empty()) throw riskx::InvalidInput("simulate: give at least one --n");
  std::vector<Row> rows;

  if (!opt.sigma_b.empty()) {
    if (opt.model.model != "normal") {
      throw riskx::InvalidInput("--sigma-b only applies to --model normal");
    }
    ModelBundle bundle = build_model(opt.model);
    for (std::int64_t n : opt.ns) {
      const riskx::InvarianceReport report = riskx::invariance_check_normal(
          opt.model.dim, bundle.points[0].coords, opt.sigma_b, opt.alpha, n, opt.reps,
          g.seed, g.workers);
      rows.push_back(Row{
          {"model", cell(opt.model.model)},
          {"alpha", cell(opt.alpha)},
          {"n", cell(n)},
          {"reps", cell(opt.reps)},
          {"mean_a", cell(report.risk_a.mean)},
          {"se_a", cell(report.risk_a.std_error)},
          {"mean_b", cell(report.risk_b.mean)},
          {"se_b", cell(report.risk_b.std_error)},
          {"z", cell(report.z)},
          {"result", cell(std::string(report.pass ? "pass" : "fail"))},
      });
    }
    write_rows(rows, g.format.empty() ? "csv" : g.format, g.precision, out);
    return;
  }

  ModelBundle bundle = build_model(opt.model);
  riskx::SimulationPlan plan;
  plan.family = bundle.family.get();
  plan.alpha = opt.alpha;
  plan.reps = opt.reps;
  plan.seed = g.seed;
  plan.workers = g.workers;
  plan.policy = opt.policy == "propagate" ? riskx::InfinitePolicy::Propagate
                                          : riskx::InfinitePolicy::CountAndExclude;

  for (std::size_t idx = 0; idx < bundle.points.size(); ++idx) {
    plan.theta_true = bundle.points[idx];
    std::optional<riskx::LMoments> lm;
    std::optional<riskx::ExpansionResult> expansion;
    if (opt.model.model == "multinomial") {
      expansion = riskx::expansion_multinomial_closed(opt.model.probs, opt.alpha);
    } else if (opt.model.model == "normal") {
      expansion = riskx::expansion_normal_closed(opt.model.dim, opt.alpha);
    } else {
      lm = riskx::estimate_l_moments(*bundle.family, bundle.points[idx], opt.mc_samples,
                                     g.seed, g.workers);
      expansion = riskx::expansion_from_l_moments(*lm, lm->g, opt.alpha,
                                                  riskx::ExpansionMethod::MixtureCorollary);
    }
    for (std::int64_t n : opt.ns) {
      plan.n = n;
      const riskx::RiskEstimate est = riskx::simulate_risk(plan);
      const double predicted = expansion->value(static_cast<double>(n));
      const bool have_z = std::isfinite(est.mean) && est.std_error > 0.0;
      rows.push_back(Row{
          {"model", cell(opt.model.model)},
          {"theta", cell(bundle.labels[idx])},
          {"alpha", cell(opt.alpha)},
          {"n", cell(n)},
          {"reps", cell(opt.reps)},
          {"reps_used", cell(est.reps_used)},
          {"infinite_count", cell(est.infinite_count)},
          {"mean", cell(est.mean)},
          {"se", cell(est.std_error)},
          {"expansion_value", cell(predicted)},
          {"z", have_z ? cell((est.mean - predicted) / est.std_error) : missing()},
      });
    }
  }
  write_rows(rows, g.format.empty() ? "csv" : g.format, g.precision, out);
}

void run_loops(const GlobalOptions& g, const LoopsOptions& opt, std::ostream& out,
               int workers) {
  riskx::ContractionPattern pattern;
  std::string label;
  if (!opt.pattern.empty()) {
    if (opt.pattern == "normal-tt") {
      pattern = riskx::normal_pattern(riskx::NormalInvariantKind::TT);
    } else if (opt.pattern == "normal-tdtd") {
      pattern = riskx::normal_pattern(riskx::NormalInvariantKind::TdTd);
    } else {
      throw riskx::InvalidInput("unknown --pattern: " + opt.pattern +
                                " (expected normal-tt or normal-tdtd)");
    }
    label = opt.pattern;
  } else {
    if (opt.upper.empty() || opt.lower.empty()) {
      throw riskx::InvalidInput("loops: give --pattern or both --upper and --lower");
    }
    pattern.upper = riskx::Matching::from_segments(parse_segments(opt.upper, "--upper"));
    pattern.lower = riskx::Matching::from_segments(parse_segments(opt.lower, "--lower"));
    const int endpoints = pattern.upper.endpoints();
    if (!opt.swaps_upper.empty()) {
      for (const riskx::Segment& s : parse_segments(opt.swaps_upper, "--swaps-upper")) {
        pattern.generators.push_back(
            riskx::swap_generator(riskx::ExchangeSide::Upper, endpoints, s.a, s.b));
      }
    }
    if (!opt.swaps_lower.empty()) {
      for (const riskx::Segment& s : parse_segments(opt.swaps_lower, "--swaps-lower")) {
        pattern.generators.push_back(
            riskx::swap_generator(riskx::ExchangeSide::Lower, endpoints, s.a, s.b));
      }
    }
    pattern.log2_normalization = opt.norm_log2;
    label = "custom";
  }

  const riskx::LoopHistogram hist = riskx::enumerate_pattern(pattern, workers);
  const riskx::Polynomial poly =
      riskx::normalized_polynomial(hist, pattern.log2_normalization);

  if (g.format.empty()) {
    bool first = true;
    for (auto it = hist.counts.rbegin(); it != hist.counts.rend(); ++it) {
      out << (first ? "" : ",") << it->second;
      first = false;
    }
    out << " → " << poly.str() << "\n";
    return;
  }
  std::vector<Row> rows;
  for (auto it = hist.counts.rbegin(); it != hist.counts.rend(); ++it) {
    rows.push_back(Row{
        {"pattern", cell(label)},
        {"loops", cell(static_cast<std::int64_t>(it->first))},
        {"count", cell(it->second)},
        {"coefficient", cell(poly.coeffs.at(it->first))},
        {"polynomial", cell(poly.str())},
    });
  }
  write_rows(rows, g.format, g.precision, out);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{
      "riskx: second-order risk expansions of maximum-likelihood estimation\n"
      "under alpha-divergence, with Monte-Carlo geometry estimation, risk\n"
      "simulation, and index-contraction loop counting."};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "RNG seed (env RISKX_SEED; flag wins)")
      ->envname("RISKX_SEED");
  app.add_option("--workers", global.workers, "Worker threads; 0 = hardware parallelism");
  app.add_option("--format", global.format, "Output format: csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_option("--precision", global.precision,
                 "Significant digits for table output (default 6)")
      ->check(CLI::Range(1, 15));
  app.add_option("--output", global.output, "Write results to this file instead of stdout");
  app.set_config("--config", "", "Key=value config file mirroring the flags; flags win");

  ExpandOptions expand;
  CLI::App* expand_cmd =
      app.add_subcommand("expand", "Evaluate risk expansions c1/n + c2/n^2");
  expand_cmd->fallthrough();
  add_model_options(expand_cmd, expand.model);
  expand_cmd->add_option("--alpha", expand.alphas, "Divergence parameter(s)");
  expand_cmd->add_option("--n", expand.ns, "Sample size(s)")->required();
  expand_cmd->add_option("--method", expand.method,
                         "general, exponential-corollary, mixture-corollary, "
                         "multinomial-closed, normal-closed, or auto");
  expand_cmd->add_option("--mc-samples", expand.mc_samples,
                         "Draws for mixture L-moment estimation");

  GeometryOptions geometry;
  CLI::App* geometry_cmd =
      app.add_subcommand("geometry", "Report scalar information-geometric invariants");
  geometry_cmd->fallthrough();
  add_model_options(geometry_cmd, geometry.model);
  geometry_cmd->add_option("--alpha", geometry.alpha, "Divergence parameter");
  geometry_cmd->add_option("--source", geometry.source, "analytic, mc, both, or auto")
      ->check(CLI::IsMember({"auto", "analytic", "mc", "both"}));
  geometry_cmd->add_option("--mc-samples", geometry.mc_samples, "Monte-Carlo draws");
  geometry_cmd->add_option("--n", geometry.ns,
                           "Optional sample size(s); adds expansion columns");

  SimulateOptions simulate;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Estimate the risk empirically and compare");
  simulate_cmd->fallthrough();
  add_model_options(simulate_cmd, simulate.model);
  simulate_cmd->add_option("--alpha", simulate.alpha, "Divergence parameter");
  simulate_cmd->add_option("--n", simulate.ns, "Sample size(s) per replicate")->required();
  simulate_cmd->add_option("--reps", simulate.reps, "Replicates (>= 100)");
  simulate_cmd->add_option("--policy", simulate.policy,
                           "Handling of infinite divergences")
      ->check(CLI::IsMember({"count-and-exclude", "propagate"}));
  simulate_cmd->add_option("--sigma-b", simulate.sigma_b,
                           "Normal family: second covariance; runs the invariance check");
  simulate_cmd->add_option("--mc-samples", simulate.mc_samples,
                           "Draws for the mixture expansion comparison");

  LoopsOptions loops;
  CLI::App* loops_cmd =
      app.add_subcommand("loops", "Count index-contraction loops over exchange patterns");
  loops_cmd->fallthrough();
  loops_cmd->add_option("--pattern", loops.pattern, "normal-tt or normal-tdtd");
  loops_cmd->add_option("--upper", loops.upper, "Custom upper matching, e.g. 1-2,3-4");
  loops_cmd->add_option("--lower", loops.lower, "Custom lower matching");
  loops_cmd->add_option("--swaps-upper", loops.swaps_upper,
                        "Upper exchange swaps, e.g. 1-6,2-3");
  loops_cmd->add_option("--swaps-lower", loops.swaps_lower, "Lower exchange swaps");
  loops_cmd->add_option("--norm-log2", loops.norm_log2,
                        "Divide coefficients by 2^k for custom patterns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!global.output.empty()) {
      file.open(global.output);
      if (!file) throw riskx::InvalidInput("cannot open output file: " + global.output);
      out = &file;
    }
    if (expand_cmd->parsed()) {
      run_expand(global, expand, *out);
    } else if (geometry_cmd->parsed()) {
      run_geometry(global, geometry, *out);
    } else if (simulate_cmd->parsed()) {
      run_simulate(global, simulate, *out);
    } else if (loops_cmd->parsed()) {
      run_loops(global, loops, *out, riskx::resolve_workers(global.workers));
    }
    return 0;
  } catch (const riskx::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const riskx::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
