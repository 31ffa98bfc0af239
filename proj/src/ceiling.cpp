#include "suspflow/ceiling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "suspflow/error.hpp"

namespace suspflow::ceiling {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Bisection on g over [lo, hi] assuming a sign change; returns the midpoint of
// the final bracket.
template <class G>
double bisect_root(G&& g, double lo, double hi, double tol) {
  double glo = g(lo);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm > 0.0) == (glo > 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Refines every grid-local extremum of `value` by bisection on `slope` and
// returns the best (argmax, max) of `score`.
template <class Value, class Slope, class Score>
std::pair<double, double> refine_extremum(int n, Value&& value, Slope&& slope, Score&& score) {
  const double h = 1.0 / n;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = score(value(i * h));
  double best_x = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (v[i] > best) {
      best = v[i];
      best_x = i * h;
    }
  }
  for (int i = 0; i < n; ++i) {
    const double prev = v[(i + n - 1) % n];
    const double next = v[(i + 1) % n];
    if (!(v[i] >= prev && v[i] >= next)) continue;
    const double lo = (i - 1) * h;
    const double hi = (i + 1) * h;
    const double slo = slope(lo);
    const double shi = slope(hi);
    if (slo == 0.0 || shi == 0.0 || (slo > 0.0) == (shi > 0.0)) continue;
    const double x = bisect_root(slope, lo, hi, 1e-10);
    const double s = score(value(x));
    if (s > best) {
      best = s;
      best_x = wrap01(x);
    }
  }
  return {best_x, best};
}

}  // namespace

TrigPolynomial::TrigPolynomial(int ell, double mean, std::vector<Harmonic> harmonics)
    : ell_(ell), mean_(mean), harmonics_(std::move(harmonics)) {
  if (ell_ < 2) fail(ErrorCode::InvalidArgument, "ell must be an integer >= 2");
  std::sort(harmonics_.begin(), harmonics_.end(),
            [](const Harmonic& a, const Harmonic& b) { return a.k < b.k; });
  for (std::size_t i = 0; i < harmonics_.size(); ++i) {
    if (harmonics_[i].k <= 0) fail(ErrorCode::InvalidArgument, "harmonic index must be positive");
    if (i > 0 && harmonics_[i].k == harmonics_[i - 1].k)
      fail(ErrorCode::InvalidArgument, "harmonic indices must be distinct");
  }
}

double TrigPolynomial::eval(double x, int order) const {
  if (order < 0 || order > 3) fail(ErrorCode::InvalidArgument, "derivative order must be in 0..3");
  double sum = order == 0 ? mean_ : 0.0;
  for (const auto& h : harmonics_) {
    const double w = kTwoPi * h.k;
    const double arg = w * x;
    const double c = std::cos(arg);
    const double s = std::sin(arg);
    // d/dx (a cos + b sin) = w (b cos - a sin)
    double a = h.cos_coeff;
    double b = h.sin_coeff;
    double scale = 1.0;
    for (int d = 0; d < order; ++d) {
      const double na = b;
      const double nb = -a;
      a = na;
      b = nb;
      scale *= w;
    }
    sum += scale * (a * c + b * s);
  }
  return sum;
}

TrigPolynomial TrigPolynomial::plus(const TrigPolynomial& other, double scale) const {
  if (other.ell_ != ell_) fail(ErrorCode::InvalidArgument, "ceilings with different ell");
  std::vector<Harmonic> merged = harmonics_;
  for (const auto& h : other.harmonics_) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Harmonic& m) { return m.k == h.k; });
    if (it == merged.end()) {
      merged.push_back({h.k, scale * h.cos_coeff, scale * h.sin_coeff});
    } else {
      it->cos_coeff += scale * h.cos_coeff;
      it->sin_coeff += scale * h.sin_coeff;
    }
  }
  return {ell_, mean_ + scale * other.mean_, std::move(merged)};
}

TrigPolynomial TrigPolynomial::coboundary(const TrigPolynomial& potential, double c) {
  std::vector<Harmonic> lifted;
  for (const auto& h : potential.harmonics_)
    lifted.push_back({h.k * potential.ell_, h.cos_coeff, h.sin_coeff});
  TrigPolynomial shifted(potential.ell_, c, std::move(lifted));
  TrigPolynomial base(potential.ell_, 0.0, potential.harmonics_);
  return shifted.plus(base, -1.0);
}

std::string TrigPolynomial::descriptor() const {
  std::string out = "ell=" + std::to_string(ell_);
  char buf[64];
  std::snprintf(buf, sizeof buf, ";mean=%.17g", mean_);
  out += buf;
  for (const auto& h : harmonics_) {
    std::snprintf(buf, sizeof buf, ";[%d,%.17g,%.17g]", h.k, h.cos_coeff, h.sin_coeff);
    out += buf;
  }
  return out;
}

bool TrigPolynomial::operator==(const TrigPolynomial& other) const {
  if (ell_ != other.ell_ || mean_ != other.mean_ || harmonics_.size() != other.harmonics_.size())
    return false;
  for (std::size_t i = 0; i < harmonics_.size(); ++i) {
    const auto& a = harmonics_[i];
    const auto& b = other.harmonics_[i];
    if (a.k != b.k || a.cos_coeff != b.cos_coeff || a.sin_coeff != b.sin_coeff) return false;
  }
  return true;
}

CeilingClass classify(const TrigPolynomial& f, double gamma0, int grid_size, double k_override) {
  const int ell = f.ell();
  if (!(gamma0 > 1.0 / ell && gamma0 < 1.0))
    fail(ErrorCode::InvalidArgument, "gamma0 must lie in (1/ell, 1)");
  if (grid_size < 64) fail(ErrorCode::InvalidArgument, "classify grid must have at least 64 points");

  CeilingClass cls;
  cls.gamma0 = gamma0;

  auto value = [&](double x) { return f.eval(x, 0); };
  auto d1 = [&](double x) { return f.eval(x, 1); };
  auto d2 = [&](double x) { return f.eval(x, 2); };

  auto [x_max, f_max] = refine_extremum(grid_size, value, d1, [](double v) { return v; });
  auto [x_min, neg_min] = refine_extremum(grid_size, value, d1, [](double v) { return -v; });
  auto [x_dmax, df_max] = refine_extremum(grid_size, d1, d2, [](double v) { return std::abs(v); });
  (void)x_dmax;

  cls.f_max = f_max;
  cls.f_min = -neg_min;
  cls.x_max = x_max;
  cls.x_min = x_min;
  cls.max_abs_df = df_max;
  if (!(cls.f_min > 0.0))
    fail(ErrorCode::DomainViolation, "ceiling function must be strictly positive",
         {{"f_min", cls.f_min}, {"x_min", cls.x_min}});

  double surrogate = 0.0;
  for (int i = 0; i < grid_size; ++i) {
    const double x = static_cast<double>(i) / grid_size;
    for (int order = 0; order <= 3; ++order) surrogate = std::max(surrogate, std::abs(f.eval(x, order)));
  }
  surrogate = std::max({surrogate, cls.f_max, cls.max_abs_df});
  cls.cr_surrogate = surrogate;

  const double need = std::max({1.0 / cls.f_min, cls.f_max, surrogate}) * 1.01;
  double K = 2.0;
  while (K <= need) K *= 2.0;
  if (k_override > K) K = k_override;
  cls.K = K;

  const double denom = gamma0 * ell - 1.0;
  cls.theta_f = cls.max_abs_df / denom;
  cls.theta_K = K / denom;
  const double inv_l2 = 1.0 / (static_cast<double>(ell) * ell);
  cls.d2s_bound = inv_l2 * K / (1.0 - inv_l2);
  return cls;
}

}  // namespace suspflow::ceiling
