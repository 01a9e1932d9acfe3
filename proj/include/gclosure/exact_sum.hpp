#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gclosure {

/// Correctly rounded floating-point summation (Shewchuk's non-overlapping
/// partials, the same scheme as Python's math.fsum).
///
/// The result depends only on the exact real sum of the inputs, so it is
/// independent of summation order. Reported energies use this so that a
/// pixel permutation of the integrand gives a bit-identical total.
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // round-half-even across the remaining partials
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

template <typename Range>
double exact_sum(const Range& values) {
  ExactSum acc;
  for (double x : values) acc.add(x);
  return acc.value();
}

}  // namespace gclosure
