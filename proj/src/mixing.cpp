#include "suspflow/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/error.hpp"
#include "suspflow/transversality.hpp"

namespace suspflow::mixing {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::NotWeaklyMixing: return "NotWeaklyMixing";
    case Verdict::WeaklyMixing: return "WeaklyMixing";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

PeriodicSamples::PeriodicSamples(std::vector<double> values) : values_(std::move(values)) {}

double PeriodicSamples::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
}

double PeriodicSamples::interpolate(double x) const {
  const std::size_t n = values_.size();
  if (n == 0) return 0.0;
  const double u = x - std::floor(x);
  const double pos = u * static_cast<double>(n);
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-12) return values_[static_cast<std::size_t>(nearest) % n];
  // Henrici's barycentric formula on equispaced nodes: cot kernel for even n,
  // csc kernel for odd n.
  const bool even = n % 2 == 0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double half = std::numbers::pi * (u - static_cast<double>(j) / n);
    const double kernel = even ? 1.0 / std::tan(half) : 1.0 / std::sin(half);
    const double w = (j % 2 == 0) ? kernel : -kernel;
    num += w * values_[j];
    den += w;
  }
  return num / den;
}

int max_depth(int ell) {
  int depth = 0;
  long long power = 1;
  while (power * ell <= (1LL << 24)) {
    power *= ell;
    ++depth;
  }
  return depth;
}

double tail_bound(const TrigPolynomial& f, int depth) {
  double max_df = 0.0;
  for (const auto& h : f.harmonics())
    max_df += kTwoPi * h.k * std::hypot(h.cos_coeff, h.sin_coeff);
  // The harmonic sum bounds max|f'|; tighten with a dense scan.
  double scanned = 0.0;
  for (int i = 0; i < 8192; ++i) scanned = std::max(scanned, std::abs(f.eval(i / 8192.0, 1)));
  max_df = std::min(max_df, scanned * (1.0 + 1e-6) + 1e-15);
  const int ell = f.ell();
  return max_df * std::pow(static_cast<double>(ell), -depth) / (ell - 1);
}

double unstable_slope(const TrigPolynomial& f, double x, int depth, PreimageSum method) {
  if (depth < 1) fail(ErrorCode::InvalidArgument, "series depth must be >= 1");
  const int ell = f.ell();
  if (depth > max_depth(ell))
    fail(ErrorCode::ResourceLimit, "ell^depth exceeds 2^24", {{"max_depth", max_depth(ell)}});
  double total = 0.0;
  long long count = 1;
  double weight = 1.0;  // ell^-2n
  for (int n = 1; n <= depth; ++n) {
    count *= ell;
    weight /= static_cast<double>(ell) * ell;
    double level = 0.0;
    if (method == PreimageSum::Direct) {
      for (long long k = 0; k < count; ++k)
        level += f.eval((x + static_cast<double>(k)) / static_cast<double>(count), 1);
    } else {
      for (const auto& h : f.harmonics()) {
        if (h.k % count != 0) continue;
        const double w = kTwoPi * h.k;
        const double arg = kTwoPi * static_cast<double>(h.k / count) * x;
        level += static_cast<double>(count) * w *
                 (h.sin_coeff * std::cos(arg) - h.cos_coeff * std::sin(arg));
      }
    }
    total += weight * level;
  }
  return total;
}

CoboundaryReport cobounding_potential(const TrigPolynomial& f, int grid, int depth, const Exec& exec) {
  if (grid < 256 || (grid & (grid - 1)) != 0)
    fail(ErrorCode::InvalidArgument, "grid must be a power of two >= 256");
  CoboundaryReport rep;
  rep.grid = grid;
  rep.depth = depth;
  rep.c = f.mean();
  rep.tail_bound = tail_bound(f, depth);

  std::vector<double> psi(grid);
  parallel_for(exec, static_cast<std::size_t>(grid),
               [&](std::size_t j) { psi[j] = unstable_slope(f, static_cast<double>(j) / grid, depth); });
  rep.psi = PeriodicSamples(psi);
  rep.psi_mean = rep.psi.mean();

  auto coeffs = fft::forward_real(psi);
  double high_band = 0.0;
  for (std::size_t m = 0; m < coeffs.size(); ++m) {
    if (m > static_cast<std::size_t>(grid) / 4) high_band += std::abs(coeffs[m]) / grid;
  }
  coeffs[0] = 0.0;  // mean removed
  coeffs[grid / 2] = 0.0;
  for (std::size_t m = 1; m < static_cast<std::size_t>(grid / 2); ++m)
    coeffs[m] /= fft::cplx(0.0, kTwoPi * static_cast<double>(m));
  auto Psi = fft::inverse_real(coeffs, static_cast<std::size_t>(grid));
  const double origin = Psi[0];
  for (auto& v : Psi) v -= origin;
  rep.Psi = PeriodicSamples(std::move(Psi));
  rep.quadrature_tol = high_band;
  return rep;
}

double cocycle_residual(CoboundaryReport& report, const TrigPolynomial& f) {
  const std::size_t n = report.Psi.size();
  double sup = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j) / n;
    const double image = report.Psi.interpolate(dynamics::tau(f.ell(), x));
    sup = std::max(sup, std::abs(image - report.Psi[j] - f(x) + report.c));
  }
  report.residual_sup = sup;
  return sup;
}

Tolerances default_tolerances(const TrigPolynomial& f, int depth) {
  const double strict = 1e-6 + tail_bound(f, depth);
  return {strict, 1e3 * strict};
}

MixingDecision classify_residual(double residual, Tolerances tol) {
  if (!(tol.strict < tol.clear)) fail(ErrorCode::InvalidArgument, "tol_strict must be below tol_clear");
  MixingDecision d;
  d.residual = residual;
  d.tol_strict = tol.strict;
  d.tol_clear = tol.clear;
  if (residual <= tol.strict) {
    d.verdict = Verdict::NotWeaklyMixing;
  } else if (residual >= tol.clear) {
    d.verdict = Verdict::WeaklyMixing;
  } else {
    d.verdict = Verdict::Inconclusive;
  }
  return d;
}

WeakMixingResult weak_mixing_test(const TrigPolynomial& f, std::optional<Tolerances> tol, int grid,
                                  int depth, const Exec& exec) {
  if (depth < 0) depth = max_depth(f.ell());
  WeakMixingResult out;
  out.report = cobounding_potential(f, grid, depth, exec);
  const double residual = cocycle_residual(out.report, f);
  out.decision = classify_residual(residual, tol.value_or(default_tolerances(f, depth)));
  out.report.verdict = out.decision.verdict;
  return out;
}

double eigenfunction_check(const CoboundaryReport& report, const TrigPolynomial& f,
                           const std::vector<double>& t_samples, double tol_strict, int nx, int ns) {
  if (report.residual_sup > tol_strict)
    fail(ErrorCode::PreconditionViolation,
         "eigenfunction check requires a vanishing cocycle residual",
         {{"residual_sup", report.residual_sup}, {"tol_strict", tol_strict}});
  const double c = report.c;
  auto phi = [&](double x, double s) {
    return std::polar(1.0, kTwoPi * (report.Psi.interpolate(x) + s) / c);
  };
  double defect = 0.0;
  for (const auto& z : transversality::flow_grid(f, nx, ns)) {
    const auto base = phi(z.x, z.s);
    for (double t : t_samples) {
      const auto image = dynamics::time_t_map(f, z, t);
      const auto expected = std::polar(1.0, kTwoPi * t / c) * base;
      defect = std::max(defect, std::abs(phi(image.x, image.s) - expected));
    }
  }
  return defect;
}

}  // namespace suspflow::mixing
