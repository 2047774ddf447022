#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace tsbsde {

/// Sample mean with spread; se is the standard error of the mean (0 for deterministic values).
struct Estimate {
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
};

inline Estimate sample_estimate(std::span<const double> x) {
  Estimate e;
  const std::size_t n = x.size();
  if (n == 0) return e;
  double sum = 0.0;
  for (double v : x) sum += v;
  e.mean = sum / static_cast<double>(n);
  if (n < 2) return e;
  double ss = 0.0;
  for (double v : x) ss += (v - e.mean) * (v - e.mean);
  e.std = std::sqrt(ss / static_cast<double>(n - 1));
  e.se = e.std / std::sqrt(static_cast<double>(n));
  return e;
}

}  // namespace tsbsde
