#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace regweights {

// Shared reciprocal-condition threshold below which scatter and design
// matrices are treated as singular.
inline constexpr double kSingularityThreshold = 1e-10;

// Neumaier-compensated sum of the given terms taken in canonical (sorted)
// order.  Sorting fixes one summation order per multiset of values, so the
// result is bit-identical under any permutation of the inputs and under any
// scheduling of the callers.
inline double canonical_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double compensation = 0.0;
  for (double v : terms) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

}  // namespace regweights
