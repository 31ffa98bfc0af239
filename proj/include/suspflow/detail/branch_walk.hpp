#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "suspflow/error.hpp"

namespace suspflow::dynamics {

namespace detail {

// f and f' together, one sincos per harmonic.
inline void eval_value_slope(const TrigPolynomial& f, double x, double& value, double& slope) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double v = f.mean();
  double d = 0.0;
  for (const auto& h : f.harmonics()) {
    const double w = two_pi * h.k;
    const double c = std::cos(w * x);
    const double s = std::sin(w * x);
    v += h.cos_coeff * c + h.sin_coeff * s;
    d += w * (h.sin_coeff * c - h.cos_coeff * s);
  }
  value = v;
  slope = d;
}

double admissible_time(const TrigPolynomial& f, double s, std::size_t cap);

template <class Visit>
struct BranchWalker {
  const TrigPolynomial& f;
  double target;  // t - s: roof time still to be accumulated
  std::size_t cap;
  Visit& visit;
  int ell;
  double s;
  double t;
  std::size_t emitted = 0;
  std::vector<std::uint8_t> letters;
  std::vector<double> inv_pow;  // ell^-i

  void walk(int depth, double y, double sum, double slope) {
    if (sum >= target - kRoofTolerance) {
      if (++emitted > cap) {
        fail(ErrorCode::ResourceLimit, "inverse branch count exceeds the configured cap",
             {{"cap", cap}, {"t", t}, {"admissible_t", admissible_time(f, s, cap)}});
      }
      const double s_prime = std::max(0.0, s + sum - t);
      visit(static_cast<const std::vector<std::uint8_t>&>(letters), depth, y, s_prime, slope);
      return;
    }
    if (static_cast<std::size_t>(depth + 1) >= inv_pow.size()) {
      inv_pow.push_back(inv_pow.back() / ell);
    }
    const double scale = inv_pow[depth + 1];
    for (int letter = 1; letter <= ell; ++letter) {
      const double child = (y + (letter - 1)) / ell;
      double value = 0.0;
      double dvalue = 0.0;
      eval_value_slope(f, child, value, dvalue);
      letters.push_back(static_cast<std::uint8_t>(letter));
      walk(depth + 1, child, sum + value, slope + scale * dvalue);
      letters.pop_back();
    }
  }
};

}  // namespace detail

template <class Visit>
void for_each_branch(const TrigPolynomial& f, FlowPoint z, double t, std::size_t cap, Visit&& visit) {
  if (t < 0.0) fail(ErrorCode::InvalidArgument, "time must be non-negative");
  detail::BranchWalker<std::remove_reference_t<Visit>> walker{
      f, t - z.s, cap, visit, f.ell(), z.s, t, 0, {}, {1.0}};
  walker.walk(0, z.x, 0.0, 0.0);
}

}  // namespace suspflow::dynamics
