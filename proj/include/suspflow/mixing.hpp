#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "suspflow/ceiling.hpp"
#include "suspflow/parallel.hpp"

namespace suspflow::mixing {

using ceiling::TrigPolynomial;

enum class Verdict { NotWeaklyMixing, WeaklyMixing, Inconclusive };
const char* to_string(Verdict v);

/// Samples of a 1-periodic function on the uniform grid x_j = j / N, with
/// barycentric trigonometric interpolation between nodes.
class PeriodicSamples {
 public:
  PeriodicSamples() = default;
  explicit PeriodicSamples(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  double mean() const;
  double interpolate(double x) const;

 private:
  std::vector<double> values_;
};

struct CoboundaryReport {
  int grid = 0;
  int depth = 0;
  PeriodicSamples psi;  // truncated unstable-slope series
  PeriodicSamples Psi;  // its antiderivative, Psi(0) = 0
  double c = 0.0;       // mean of f
  double psi_mean = 0.0;
  double tail_bound = 0.0;       // max|f'| ell^-depth / (ell - 1)
  double quadrature_tol = 0.0;   // spectral antiderivative consistency check
  double residual_sup = 0.0;
  Verdict verdict = Verdict::Inconclusive;
};

enum class PreimageSum {
  Aliased,  // closed form: only harmonics divisible by ell^n survive the sum
  Direct,   // literal enumeration of the ell^n points (x + k) / ell^n
};

/// psi_N(x) = sum_{n=1..N} ell^-2n sum_{tau^n y = x} f'(y). Requires ell^depth <= 2^24.
double unstable_slope(const TrigPolynomial& f, double x, int depth,
                      PreimageSum method = PreimageSum::Aliased);

/// max|f'| ell^-depth / (ell - 1).
double tail_bound(const TrigPolynomial& f, int depth);

/// Largest depth with ell^depth <= 2^24.
int max_depth(int ell);

/// psi on a power-of-two grid (>= 256), Psi by spectral antiderivative, c = mean.
CoboundaryReport cobounding_potential(const TrigPolynomial& f, int grid, int depth,
                                      const Exec& exec = {});

/// sup over the grid of |Psi(tau x) - Psi(x) - f(x) + c|; stored in the report too.
double cocycle_residual(CoboundaryReport& report, const TrigPolynomial& f);

struct Tolerances {
  double strict = 0.0;
  double clear = 0.0;
};

/// tol_strict = 1e-6 + tail bound, tol_clear = 1e3 tol_strict.
Tolerances default_tolerances(const TrigPolynomial& f, int depth);

struct MixingDecision {
  Verdict verdict = Verdict::Inconclusive;
  double residual = 0.0;
  double tol_strict = 0.0;
  double tol_clear = 0.0;
};

MixingDecision classify_residual(double residual, Tolerances tol);

struct WeakMixingResult {
  CoboundaryReport report;
  MixingDecision decision;
};

/// Full pipeline: series, potential, residual, verdict. Missing tolerances
/// default to default_tolerances(f, depth).
WeakMixingResult weak_mixing_test(const TrigPolynomial& f, std::optional<Tolerances> tol = {},
                                  int grid = 4096, int depth = -1, const Exec& exec = {});

/// Max over a grid of X_f and the given times of
/// |Phi(T^t z) - exp(2 pi i t / c) Phi(z)| with Phi(x,s) = exp(2 pi i (Psi(x) + s) / c).
/// Throws precondition-violation if the residual exceeds tol_strict.
double eigenfunction_check(const CoboundaryReport& report, const TrigPolynomial& f,
                           const std::vector<double>& t_samples, double tol_strict, int nx = 64,
                           int ns = 8);

}  // namespace suspflow::mixing
