#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "riskx/errors.hpp"

namespace riskx {

/// One pairing of two distinct endpoint labels (1-based).
struct Segment {
  int a = 0;
  int b = 0;
};

/// A perfect matching of the endpoint set {1, ..., 2k}.
class Matching {
 public:
  /// Empty placeholder; fill a real matching with from_segments.
  Matching() = default;

  static Matching from_segments(const std::vector<Segment>& segments);

  int endpoints() const { return static_cast<int>(partner_.size()) - 1; }
  int partner(int e) const { return partner_[e]; }
  const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<int> partner_;  // partner_[e] for e in 1..2k; slot 0 unused
  std::vector<Segment> segments_;
};

enum class ExchangeSide { Upper, Lower };

/// An involutive relabeling of one side's endpoints, with a multiplicity
/// weight that scales every combination in which the generator is active.
struct ExchangeGenerator {
  ExchangeSide side = ExchangeSide::Upper;
  std::vector<int> perm;  // 1-based image table; perm[perm[e]] = e
  std::int64_t weight = 1;
};

/// The common case: swap two endpoint labels, everything else fixed.
ExchangeGenerator swap_generator(ExchangeSide side, int endpoints, int a, int b);

/// Two matchings of the same endpoint set plus exchange generators. The
/// enumeration walks all on/off combinations of the generators, applies the
/// active relabelings to their side's matching, and tallies p^loops; the
/// final polynomial is divided by 2^log2_normalization.
struct ContractionPattern {
  Matching upper;
  Matching lower;
  std::vector<ExchangeGenerator> generators;
  int log2_normalization = 0;
};

/// Number of cycles in the union multigraph of two perfect matchings (each
/// cycle alternates upper and lower edges). Invariant under simultaneous
/// relabeling of both matchings.
int count_loops(const Matching& upper, const Matching& lower);

/// Loop-count histogram over generator combinations; counts carry the
/// product of active generator weights.
struct LoopHistogram {
  std::map<int, std::int64_t> counts;  // loops -> weighted combinations

  std::int64_t total() const;
};

/// Enumerates all 2^g generator combinations (g <= 20, else refused with a
/// size report). Deterministic for any worker count: block results are
/// integers merged in block order.
LoopHistogram enumerate_pattern(const ContractionPattern& pattern, int workers = 1);

/// Sparse polynomial in p, as {power -> coefficient}.
struct Polynomial {
  std::map<int, double> coeffs;

  double eval(double p) const;
  /// Descending powers, as in "p^3+3p^2+4p".
  std::string str() const;
};

/// Histogram divided by 2^log2_normalization.
Polynomial normalized_polynomial(const LoopHistogram& hist, int log2_normalization);

/// The two built-in patterns for the zero-mean normal family. Products of
/// Gaussian log-derivative tensors expand, through sixth-moment pairings,
/// into sums of trace contractions; every closed index loop contributes one
/// factor of p. Twelve endpoints stand for the two triples of matrix-index
/// slots; the upper matching pairs slots within each expectation, the lower
/// matching encodes the metric contraction between them, and the generators
/// run over the equivalent Gaussian pairings on each side.
enum class NormalInvariantKind { TT, TdTd };

ContractionPattern normal_pattern(NormalInvariantKind kind);

/// Enumerates the pattern and returns the normalized polynomial:
/// TT -> p^3 + 3p^2 + 4p; TdTd -> 2p^3 + 4p^2 + 2p. Both agree with the
/// exact moment algebra and the Monte-Carlo estimates in `geometry`.
Polynomial normal_invariant_via_loops(NormalInvariantKind kind, int workers = 1);

}  // namespace riskx
