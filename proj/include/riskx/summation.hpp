#pragma once

#include <cstddef>
#include <span>

namespace riskx {

/// Kahan-compensated accumulator for long in-order sums.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double kahan_total(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// Pairwise (tree) summation with a shape fixed by the element count alone,
/// so the result is independent of how producers were scheduled.
inline double pairwise_total(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_total(xs.first(half)) + pairwise_total(xs.subspan(half));
}

}  // namespace riskx
