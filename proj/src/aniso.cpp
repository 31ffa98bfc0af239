#include "suspflow/aniso.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fft.hpp"
#include "suspflow/error.hpp"
#include "suspflow/smooth_step.hpp"

namespace suspflow::aniso {

namespace {

constexpr double kPi = std::numbers::pi;

double slope_angle(double slope) {
  if (std::isinf(slope)) return kPi / 2.0;
  const double a = std::atan(slope);
  return a < 0.0 ? a + kPi : a;
}

double mod_pi(double a) {
  double r = std::fmod(a, kPi);
  if (r < 0.0) r += kPi;
  return r >= kPi ? 0.0 : r;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<fft::cplx> spectrum_of(const GridFunction2D& u) {
  std::vector<fft::cplx> data(u.values.begin(), u.values.end());
  return fft::forward_2d(data, static_cast<std::size_t>(u.n));
}

void check_support(const GridFunction2D& u) {
  if (!u.support) return;
  const Rect& r = *u.support;
  const int lo = u.n / 4;
  const int hi = 3 * u.n / 4;
  if (r.i0 < lo || r.j0 < lo || r.i1 > hi || r.j1 > hi || r.i0 >= r.i1 || r.j0 >= r.j1)
    fail(ErrorCode::DomainViolation, "support rectangle leaves less than 25% zero padding",
         {{"rect", {r.i0, r.i1, r.j0, r.j1}}, {"n", u.n}});
  for (int i = 0; i < u.n; ++i)
    for (int j = 0; j < u.n; ++j) {
      const bool inside = i >= r.i0 && i < r.i1 && j >= r.j0 && j < r.j1;
      if (!inside && u.at(i, j) != 0.0)
        fail(ErrorCode::DomainViolation, "function is non-zero outside its support rectangle",
             {{"i", i}, {"j", j}});
    }
}

// Squared-modulus weights |U_k|^2 h^2 / N^2, so their sum is ||u||^2_{L^2}.
std::vector<double> power_spectrum(const GridFunction2D& u) {
  const auto U = spectrum_of(u);
  const double scale = u.h * u.h / (static_cast<double>(u.n) * u.n);
  std::vector<double> power(U.size());
  for (std::size_t k = 0; k < U.size(); ++k) power[k] = std::norm(U[k]) * scale;
  return power;
}

}  // namespace

double line_angle(double xi, double eta) { return mod_pi(std::atan2(eta, xi)); }

double ConeSpec::start_angle() const { return slope_angle(slope_lo); }

double ConeSpec::width() const { return mod_pi(slope_angle(slope_hi) - slope_angle(slope_lo)); }

bool ConeSpec::contains(double xi, double eta) const {
  if (xi == 0.0 && eta == 0.0) return false;
  return mod_pi(line_angle(xi, eta) - start_angle()) <= width();
}

bool ConeSpec::intersects(const ConeSpec& other) const {
  const double d1 = mod_pi(other.start_angle() - start_angle());
  const double d2 = mod_pi(start_angle() - other.start_angle());
  return d1 <= width() || d2 <= other.width();
}

Polarization::Polarization(ConeSpec plus, ConeSpec minus) : plus_(plus), minus_(minus) {
  if (plus.intersects(minus))
    fail(ErrorCode::InvalidArgument, "polarization cones must meet only at the origin");
  gap_after_plus_ = mod_pi(minus.start_angle() - (plus.start_angle() + plus.width()));
  gap_after_minus_ = mod_pi(plus.start_angle() - (minus.start_angle() + minus.width()));
}

double Polarization::phi_plus(double xi, double eta) const {
  if (xi == 0.0 && eta == 0.0) return 0.5;
  const double d = mod_pi(line_angle(xi, eta) - plus_.start_angle());
  const double w = plus_.width();
  if (d <= w) return 1.0;
  if (d < w + gap_after_plus_) return 1.0 - smooth_step((d - w) / gap_after_plus_);
  const double m_end = w + gap_after_plus_ + minus_.width();
  if (d <= m_end) return 0.0;
  return smooth_step((d - m_end) / gap_after_minus_);
}

bool precedes(const Polarization& a, const Polarization& b) {
  const double comp_start = mod_pi(b.plus().start_angle() + b.plus().width());
  const double comp_width = kPi - b.plus().width();
  const double d = mod_pi(comp_start - a.minus().start_angle());
  return d > 0.0 && d + comp_width < a.minus().width();
}

GridFunction2D::GridFunction2D(int n_, double h_) : n(n_), h(h_) {
  if (!is_power_of_two(n_) || n_ < 4) fail(ErrorCode::InvalidArgument, "grid size must be a power of 2");
  if (!(h_ > 0.0)) fail(ErrorCode::InvalidArgument, "grid spacing must be positive");
  values.assign(static_cast<std::size_t>(n_) * n_, 0.0);
}

double GridFunction2D::l2_norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum) * h;
}

double frequency(int index, int n, double h) {
  const int k = index < n / 2 ? index : index - n;
  return 2.0 * kPi * k / (n * h);
}

int max_level(double h) {
  const double nyquist = kPi / h;
  return std::max(1, static_cast<int>(std::ceil(std::log2(std::sqrt(2.0) * nyquist))));
}

double mask_value(const Polarization& theta, int level, Sign sigma, double xi, double eta) {
  const double r = std::hypot(xi, eta);
  if (level == 0) return dyadic_cutoff(r) / 2.0;
  const double radial = dyadic_cutoff(std::ldexp(r, -level)) - dyadic_cutoff(std::ldexp(r, -level + 1));
  if (radial == 0.0) return 0.0;
  const double phi = theta.phi_plus(xi, eta);
  return radial * (sigma == Sign::Plus ? phi : 1.0 - phi);
}

std::vector<double> dyadic_mask(const Polarization& theta, int level, Sign sigma, int n, double h) {
  if (level < 0 || level > max_level(h))
    fail(ErrorCode::InvalidArgument, "dyadic level beyond the Nyquist range of the grid",
         {{"level", level}, {"max_level", max_level(h)}});
  std::vector<double> mask(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double xi = frequency(i, n, h);
    for (int j = 0; j < n; ++j)
      mask[static_cast<std::size_t>(i) * n + j] = mask_value(theta, level, sigma, xi, frequency(j, n, h));
  }
  return mask;
}

double partition_of_unity_error(const Polarization& theta, int n, double h) {
  std::vector<double> total(static_cast<std::size_t>(n) * n, 0.0);
  for (int lv = 0; lv <= max_level(h); ++lv)
    for (Sign s : {Sign::Plus, Sign::Minus}) {
      const auto mask = dyadic_mask(theta, lv, s, n, h);
      for (std::size_t k = 0; k < total.size(); ++k) total[k] += mask[k];
    }
  double worst = 0.0;
  for (double v : total) worst = std::max(worst, std::abs(v - 1.0));
  return worst;
}

NormParts aniso_norm(const GridFunction2D& u, const Polarization& theta, NormParams params,
                     const Exec& exec) {
  check_support(u);
  const auto power = power_spectrum(u);
  const int levels = max_level(u.h) + 1;
  std::vector<double> plus(levels), minus(levels);
  parallel_for(exec, static_cast<std::size_t>(levels), [&](std::size_t lv) {
    const auto mp = dyadic_mask(theta, static_cast<int>(lv), Sign::Plus, u.n, u.h);
    const auto mm = dyadic_mask(theta, static_cast<int>(lv), Sign::Minus, u.n, u.h);
    double sp = 0.0, sm = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      sp += mp[k] * mp[k] * power[k];
      sm += mm[k] * mm[k] * power[k];
    }
    plus[lv] = std::exp2(2.0 * params.p * static_cast<double>(lv)) * sp;
    minus[lv] = std::exp2(2.0 * params.q * static_cast<double>(lv)) * sm;
  });
  NormParts out;
  double sp = 0.0, sm = 0.0;
  for (int lv = 0; lv < levels; ++lv) {
    sp += plus[lv];
    sm += minus[lv];
  }
  out.plus = std::sqrt(sp);
  out.minus = std::sqrt(sm);
  out.total = std::sqrt(sp + sm);
  return out;
}

double embedding_check(const GridFunction2D& u, const Polarization& theta, const Exec& exec) {
  const double l2 = u.l2_norm();
  if (l2 == 0.0) fail(ErrorCode::InvalidArgument, "embedding ratio undefined for the zero function");
  return l2 / aniso_norm(u, theta, strong_params(), exec).total;
}

GridFunction2D restrict_to_cone(const GridFunction2D& u, const ConeSpec& cone) {
  auto U = spectrum_of(u);
  for (int i = 0; i < u.n; ++i) {
    const double xi = frequency(i, u.n, u.h);
    for (int j = 0; j < u.n; ++j) {
      // Nyquist rows and columns have no Hermitian partner on the same line.
      const bool nyquist = i == u.n / 2 || j == u.n / 2;
      if (nyquist || !cone.contains(xi, frequency(j, u.n, u.h)))
        U[static_cast<std::size_t>(i) * u.n + j] = 0.0;
    }
  }
  const auto back = fft::inverse_2d(U, static_cast<std::size_t>(u.n));
  GridFunction2D out(u.n, u.h);
  for (std::size_t k = 0; k < back.size(); ++k) out.values[k] = back[k].real();
  return out;
}

double transversal_orthogonality(const GridFunction2D& u, const GridFunction2D& v,
                                 const Polarization& theta_hat, const ConeSpec& cone_u,
                                 const ConeSpec& cone_v) {
  if (u.n != v.n || u.h != v.h) fail(ErrorCode::InvalidArgument, "functions live on different grids");
  if (cone_u.intersects(cone_v))
    fail(ErrorCode::PreconditionViolation, "cones must meet only at the origin");
  const auto U = spectrum_of(u);
  const auto V = spectrum_of(v);
  double peak_u = 0.0, peak_v = 0.0;
  for (std::size_t k = 0; k < U.size(); ++k) {
    peak_u = std::max(peak_u, std::abs(U[k]));
    peak_v = std::max(peak_v, std::abs(V[k]));
  }
  for (int i = 0; i < u.n; ++i) {
    const double xi = frequency(i, u.n, u.h);
    for (int j = 0; j < u.n; ++j) {
      const double eta = frequency(j, u.n, u.h);
      const std::size_t k = static_cast<std::size_t>(i) * u.n + j;
      if ((!cone_u.contains(xi, eta) && std::abs(U[k]) > 1e-12 * peak_u) ||
          (!cone_v.contains(xi, eta) && std::abs(V[k]) > 1e-12 * peak_v))
        fail(ErrorCode::PreconditionViolation, "Fourier support not confined to the given cone",
             {{"i", i}, {"j", j}});
    }
  }
  return masked_inner_max(u, v, theta_hat);
}

double masked_inner_max(const GridFunction2D& u, const GridFunction2D& v, const Polarization& theta_hat) {
  if (u.n != v.n || u.h != v.h) fail(ErrorCode::InvalidArgument, "functions live on different grids");
  const auto U = spectrum_of(u);
  const auto V = spectrum_of(v);
  const double scale = u.h * u.h / (static_cast<double>(u.n) * u.n);
  double best = 0.0;
  for (int lv = 0; lv <= max_level(u.h); ++lv) {
    const auto mask = dyadic_mask(theta_hat, lv, Sign::Minus, u.n, u.h);
    std::complex<double> inner = 0.0;
    for (std::size_t k = 0; k < U.size(); ++k) inner += mask[k] * mask[k] * U[k] * std::conj(V[k]);
    best = std::max(best, std::abs(inner) * scale);
  }
  return best;
}

double parseval_defect(const GridFunction2D& u, const Polarization& theta) {
  const auto power = power_spectrum(u);
  double total = 0.0;
  for (double p : power) total += p;
  if (total == 0.0) fail(ErrorCode::InvalidArgument, "Parseval check needs a non-zero function");
  double pieces = 0.0;
  for (int lv = 0; lv <= max_level(u.h); ++lv)
    for (Sign s : {Sign::Plus, Sign::Minus}) {
      const auto mask = dyadic_mask(theta, lv, s, u.n, u.h);
      for (std::size_t k = 0; k < power.size(); ++k) pieces += mask[k] * power[k];
    }
  return std::abs(pieces - total) / total;
}

double ordering_constant(const std::vector<GridFunction2D>& sample, const Polarization& theta_prime,
                         const Polarization& theta) {
  if (!precedes(theta_prime, theta))
    fail(ErrorCode::PreconditionViolation, "polarizations are not ordered");
  double c = 0.0;
  for (const auto& u : sample) {
    const double base = aniso_norm(u, theta, strong_params()).total;
    if (base == 0.0) continue;
    c = std::max(c, aniso_norm(u, theta_prime, strong_params()).total / base);
  }
  return c;
}

GridFunction2D single_mode(int n, double h, int kx, int ky) {
  GridFunction2D u(n, h);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) u.at(i, j) = std::cos(2.0 * kPi * (kx * i + ky * j) / n);
  return u;
}

GridFunction2D random_function(int n, double h, std::uint64_t seed, int max_mode) {
  GridFunction2D u(n, h);
  if (max_mode <= 0) max_mode = std::max(1, n / 8);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  std::uniform_int_distribution<int> mode(-max_mode, max_mode);
  struct Wave {
    double a, kx, ky, ph;
  };
  std::vector<Wave> waves(8);
  for (auto& w : waves) w = {normal(rng), double(mode(rng)), double(mode(rng)), phase(rng)};
  const int lo = n / 4;
  const int hi = 3 * n / 4;
  const double span = hi - lo;
  auto envelope = [&](int i) {
    const double r = (i - lo + 0.5) / span;
    return smooth_step(4.0 * r) * smooth_step(4.0 * (1.0 - r));
  };
  for (int i = lo; i < hi; ++i)
    for (int j = lo; j < hi; ++j) {
      double sum = 0.0;
      for (const auto& w : waves) sum += w.a * std::cos(2.0 * kPi * (w.kx * i + w.ky * j) / n + w.ph);
      u.at(i, j) = envelope(i) * envelope(j) * sum;
    }
  u.support = Rect{lo, hi, lo, hi};
  return u;
}

}  // namespace suspflow::aniso
