#pragma once

#include <cmath>

namespace suspflow {

/// C-infinity step on [0,1]: 0 for u <= 0, 1 for u >= 1, built from exp(-1/u).
/// Satisfies smooth_step(u) + smooth_step(1 - u) == 1.
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

/// Dyadic cutoff: 1 for s <= 1, 0 for s >= 2.
inline double dyadic_cutoff(double s) { return 1.0 - smooth_step(s - 1.0); }

}  // namespace suspflow
