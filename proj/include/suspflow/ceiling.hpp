#pragma once

#include <string>
#include <vector>

namespace suspflow::ceiling {

struct Harmonic {
  int k = 1;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

/// f(x) = mean + sum_k [c_k cos(2 pi k x) + s_k sin(2 pi k x)] on R/Z, together
/// with the base ell of the angle-multiplying map x -> ell x mod 1.
class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  /// Harmonics are sorted by k; duplicate or non-positive k and ell < 2 throw
  /// invalid-argument. Positivity is checked by classify(), not here.
  TrigPolynomial(int ell, double mean, std::vector<Harmonic> harmonics);

  static TrigPolynomial constant(int ell, double c) { return {ell, c, {}}; }

  int ell() const noexcept { return ell_; }
  double mean() const noexcept { return mean_; }
  const std::vector<Harmonic>& harmonics() const noexcept { return harmonics_; }

  /// Derivative of the given order (0..3) at x, trigonometric closed form.
  double eval(double x, int order = 0) const;
  double operator()(double x) const { return eval(x, 0); }

  /// Coefficient-wise sum; both operands must share ell.
  TrigPolynomial plus(const TrigPolynomial& other, double scale = 1.0) const;
  /// Psi(ell x) - Psi(x) + c, the additive coboundary built from Psi.
  static TrigPolynomial coboundary(const TrigPolynomial& potential, double c);

  /// Canonical text used to tag reports computed from this ceiling.
  std::string descriptor() const;

  bool operator==(const TrigPolynomial& other) const;

 private:
  int ell_ = 2;
  double mean_ = 1.0;
  std::vector<Harmonic> harmonics_;
};

/// Class constants of a ceiling for a fixed gamma0 in (1/ell, 1).
struct CeilingClass {
  double gamma0 = 0.0;
  double theta_f = 0.0;   // max|f'| / (gamma0 ell - 1)
  double K = 2.0;         // power of two bounding 1/min f, max f and the C^3 surrogate
  double f_min = 0.0;
  double f_max = 0.0;
  double x_min = 0.0;     // argmin f
  double x_max = 0.0;     // argmax f
  double max_abs_df = 0.0;
  double cr_surrogate = 0.0;  // max over the grid of |f|,|f'|,|f''|,|f'''|
  double theta_K = 0.0;   // K / (gamma0 ell - 1)
  double d2s_bound = 0.0; // ell^-2 K / (1 - ell^-2)
  int surrogate_order = 3;  // C^r norm truncated to derivatives <= 3
};

/// Locates the extrema of f and |f'| by a grid scan refined by bisection on
/// the next derivative (tolerance 1e-10), then fills in every class constant.
/// `k_override` may raise K but never lower it.
CeilingClass classify(const TrigPolynomial& f, double gamma0, int grid_size = 4096,
                      double k_override = 0.0);

}  // namespace suspflow::ceiling
