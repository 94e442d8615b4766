#include "riskx/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "riskx/parallel.hpp"

namespace riskx {

namespace {

/// Cycle count over raw partner tables (1-based, slot 0 unused).
int count_loops_tables(const std::vector<int>& upper, const std::vector<int>& lower) {
  const int endpoints = static_cast<int>(upper.size()) - 1;
  std::vector<bool> visited(endpoints + 1, false);
  int loops = 0;
  for (int start = 1; start <= endpoints; ++start) {
    if (visited[start]) continue;
    ++loops;
    int e = start;
    // Alternate upper and lower edges until the walk closes.
    while (!visited[e]) {
      visited[e] = true;
      const int via_upper = upper[e];
      visited[via_upper] = true;
      e = lower[via_upper];
    }
  }
  return loops;
}

/// new_table[perm[e]] = perm[old_table[e]].
void apply_relabeling(const std::vector<int>& perm, std::vector<int>& table,
                      std::vector<int>& scratch) {
  const int endpoints = static_cast<int>(table.size()) - 1;
  scratch.resize(table.size());
  for (int e = 1; e <= endpoints; ++e) scratch[perm[e]] = perm[table[e]];
  table.swap(scratch);
}

void check_involution(const ExchangeGenerator& gen, int endpoints, std::size_t index) {
  if (static_cast<int>(gen.perm.size()) != endpoints + 1) {
    std::ostringstream msg;
    msg << "enumerate_pattern: generator " << index << " permutes "
        << (gen.perm.size() ? gen.perm.size() - 1 : 0) << " endpoints, expected "
        << endpoints;
    throw InvalidInput(msg.str());
  }
  for (int e = 1; e <= endpoints; ++e) {
    const int img = gen.perm[e];
    if (img < 1 || img > endpoints || gen.perm[img] != e) {
      std::ostringstream msg;
      msg << "enumerate_pattern: generator " << index << " is not an involution at "
          << "endpoint " << e;
      throw InvalidInput(msg.str());
    }
  }
}

}  // namespace

Matching Matching::from_segments(const std::vector<Segment>& segments) {
  const int endpoints = 2 * static_cast<int>(segments.size());
  if (endpoints == 0) throw InvalidInput("Matching: no segments");
  Matching m;
  m.partner_.assign(endpoints + 1, 0);
  for (const Segment& s : segments) {
    if (s.a < 1 || s.a > endpoints || s.b < 1 || s.b > endpoints || s.a == s.b) {
      std::ostringstream msg;
      msg << "Matching: segment (" << s.a << "," << s.b << ") is not a pair of "
          << "distinct labels in 1.." << endpoints;
      throw InvalidInput(msg.str());
    }
    if (m.partner_[s.a] != 0 || m.partner_[s.b] != 0) {
      std::ostringstream msg;
      msg << "Matching: endpoint " << (m.partner_[s.a] != 0 ? s.a : s.b)
          << " appears twice";
      throw InvalidInput(msg.str());
    }
    m.partner_[s.a] = s.b;
    m.partner_[s.b] = s.a;
  }
  m.segments_ = segments;
  return m;
}

ExchangeGenerator swap_generator(ExchangeSide side, int endpoints, int a, int b) {
  if (a < 1 || a > endpoints || b < 1 || b > endpoints || a == b) {
    throw InvalidInput("swap_generator: labels must be distinct and in range");
  }
  ExchangeGenerator gen;
  gen.side = side;
  gen.perm.resize(endpoints + 1);
  for (int e = 0; e <= endpoints; ++e) gen.perm[e] = e;
  std::swap(gen.perm[a], gen.perm[b]);
  return gen;
}

int count_loops(const Matching& upper, const Matching& lower) {
  if (upper.endpoints() != lower.endpoints()) {
    throw InvalidInput("count_loops: matchings cover different endpoint sets");
  }
  std::vector<int> up(upper.endpoints() + 1), lo(lower.endpoints() + 1);
  for (int e = 1; e <= upper.endpoints(); ++e) {
    up[e] = upper.partner(e);
    lo[e] = lower.partner(e);
  }
  return count_loops_tables(up, lo);
}

std::int64_t LoopHistogram::total() const {
  std::int64_t t = 0;
  for (const auto& [loops, count] : counts) t += count;
  return t;
}

LoopHistogram enumerate_pattern(const ContractionPattern& pattern, int workers) {
  const int endpoints = pattern.upper.endpoints();
  if (pattern.lower.endpoints() != endpoints) {
    throw InvalidInput("enumerate_pattern: matchings cover different endpoint sets");
  }
  const std::size_t g = pattern.generators.size();
  if (g > 20) {
    std::ostringstream msg;
    msg << "enumerate_pattern: " << g << " generators would need " << (1ull << g)
        << " combinations; the cap is 2^20";
    throw InvalidInput(msg.str());
  }
  for (std::size_t i = 0; i < g; ++i) check_involution(pattern.generators[i], endpoints, i);

  std::vector<int> base_upper(endpoints + 1), base_lower(endpoints + 1);
  for (int e = 1; e <= endpoints; ++e) {
    base_upper[e] = pattern.upper.partner(e);
    base_lower[e] = pattern.lower.partner(e);
  }

  const std::uint64_t combos = 1ull << g;
  const int max_loops = endpoints / 2;
  const std::int64_t blocks = std::min<std::int64_t>(64, static_cast<std::int64_t>(combos));
  const std::uint64_t per_block = combos / blocks;
  const std::uint64_t rem = combos % blocks;
  std::vector<std::vector<std::int64_t>> partial(
      blocks, std::vector<std::int64_t>(max_loops + 1, 0));

  for_each_block(blocks, resolve_workers(workers), [&](std::int64_t b) {
    const std::uint64_t first = b * per_block + std::min<std::uint64_t>(b, rem);
    const std::uint64_t count = per_block + (static_cast<std::uint64_t>(b) < rem ? 1 : 0);
    std::vector<int> up, lo, scratch;
    for (std::uint64_t mask = first; mask < first + count; ++mask) {
      up = base_upper;
      lo = base_lower;
      std::int64_t weight = 1;
      for (std::size_t i = 0; i < g; ++i) {
        if (!(mask >> i & 1u)) continue;
        const ExchangeGenerator& gen = pattern.generators[i];
        apply_relabeling(gen.perm, gen.side == ExchangeSide::Upper ? up : lo, scratch);
        weight *= gen.weight;
      }
      partial[b][count_loops_tables(up, lo)] += weight;
    }
  });

  LoopHistogram hist;
  for (std::int64_t b = 0; b < blocks; ++b) {
    for (int loops = 0; loops <= max_loops; ++loops) {
      if (partial[b][loops] != 0) hist.counts[loops] += partial[b][loops];
    }
  }
  return hist;
}

double Polynomial::eval(double p) const {
  double total = 0.0;
  for (const auto& [power, coeff] : coeffs) total += coeff * std::pow(p, power);
  return total;
}

std::string Polynomial::str() const {
  std::ostringstream out;
  bool first = true;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    const auto [power, coeff] = *it;
    if (coeff == 0.0) continue;
    const double mag = std::abs(coeff);
    if (!first) out << (coeff < 0 ? "-" : "+");
    else if (coeff < 0) out << "-";
    first = false;
    const bool unit = mag == 1.0 && power != 0;
    if (!unit) {
      if (mag == std::floor(mag) && mag < 1e15) out << static_cast<long long>(mag);
      else out << mag;
    }
    if (power >= 1) out << "p";
    if (power >= 2) out << "^" << power;
  }
  if (first) out << "0";
  return out.str();
}

Polynomial normalized_polynomial(const LoopHistogram& hist, int log2_normalization) {
  const double scale = std::ldexp(1.0, -log2_normalization);
  Polynomial poly;
  for (const auto& [loops, count] : hist.counts) {
    poly.coeffs[loops] = static_cast<double>(count) * scale;
  }
  return poly;
}

ContractionPattern normal_pattern(NormalInvariantKind kind) {
  constexpr int kEndpoints = 12;
  ContractionPattern pat;
  // Each triple of endpoints (1,3,5 / 2,4,6 paired across) carries the three
  // matrix-index slots of one skewness factor; the second factor sits on
  // 7..12. The upper matching realizes one representative sixth-moment
  // pairing inside each expectation, the lower matching wires the two
  // factors together per the scalar being contracted.
  pat.upper = Matching::from_segments(
      {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}});
  if (kind == NormalInvariantKind::TT) {
    // Full contraction T_{ikl} T^{ikl}: every slot of the first factor meets
    // the matching slot of the second.
    pat.lower = Matching::from_segments(
        {{1, 7}, {6, 12}, {2, 8}, {3, 9}, {4, 10}, {5, 11}});
  } else {
    // Traced contraction T_{ik}^{k} T^{i}_{s}{}^{s}: one slot pair is traced
    // within each factor, and only the remaining slots meet across.
    pat.lower = Matching::from_segments(
        {{1, 2}, {3, 6}, {7, 8}, {9, 12}, {4, 10}, {5, 11}});
  }
  // The remaining Gaussian pairings differ from the representative one by
  // these slot swaps; summing over all on/off combinations reproduces the
  // full Isserlis expansion on both sides.
  const std::vector<std::pair<int, int>> swaps = {{1, 6}, {2, 3}, {4, 5},
                                                  {7, 12}, {8, 9}, {10, 11}};
  for (const auto& [a, b] : swaps) {
    pat.generators.push_back(swap_generator(ExchangeSide::Upper, kEndpoints, a, b));
  }
  for (const auto& [a, b] : swaps) {
    pat.generators.push_back(swap_generator(ExchangeSide::Lower, kEndpoints, a, b));
  }
  pat.log2_normalization = 9;
  return pat;
}

Polynomial normal_invariant_via_loops(NormalInvariantKind kind, int workers) {
  const ContractionPattern pat = normal_pattern(kind);
  return normalized_polynomial(enumerate_pattern(pat, workers), pat.log2_normalization);
}

}  // namespace riskx
