#include "suspflow/genericity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "suspflow/error.hpp"
#include "suspflow/smooth_step.hpp"
#include "suspflow/transversality.hpp"

namespace suspflow::genericity {

namespace {

// Ratio making the derivative integrate to zero: int_0^1 inner = 5/12 and
// int_0^1 outer = 0.4 in the scaled distance d = |x - c| / r.
constexpr double kOuterWeight = (5.0 / 12.0) / 0.4;

double circle_offset(double x, double c) {
  double u = x - c;
  u -= std::round(u);
  return u;
}

double circle_distance(double a, double b) { return std::abs(circle_offset(a, b)); }

double inner_profile(double d) { return 1.0 - smooth_step(6.0 * (d - 1.0 / 3.0)); }

double outer_profile(double d) {
  return smooth_step((d - 0.5) / 0.1) * smooth_step((1.0 - d) / 0.1);
}

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t ipow(int base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

Word word_from_index(int ell, int n, std::size_t index) {
  std::vector<std::uint8_t> letters(n);
  for (int k = n - 1; k >= 0; --k) {
    letters[k] = static_cast<std::uint8_t>(1 + index % ell);
    index /= ell;
  }
  return Word(ell, std::move(letters));
}

// sum_k ell^-k phi'([b]_k(x)) for one direction.
double direction_slope(const Bump& bump, const Word& b, double x) {
  const int ell = b.ell();
  double y = x;
  double scale = 1.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    y = (y + b[k] - 1) / ell;
    scale /= ell;
    sum += scale * bump.derivative(y);
  }
  return sum;
}

double grid_minimum(const TrigPolynomial& f) {
  constexpr int kGrid = 8192;
  double lo = f(0.0);
  for (int i = 1; i < kGrid; ++i) lo = std::min(lo, f(static_cast<double>(i) / kGrid));
  double lipschitz = 0.0;
  for (const auto& h : f.harmonics())
    lipschitz += 2.0 * std::numbers::pi * h.k * std::hypot(h.cos_coeff, h.sin_coeff);
  return lo - lipschitz / (2.0 * kGrid);
}

}  // namespace

double GenericityParams::delta(int ell) const {
  return (std::log(gamma) - std::log(alpha)) / (std::log(static_cast<double>(ell)) - std::log(alpha));
}

std::vector<std::string> GenericityParams::violations(int ell) const {
  std::vector<std::string> out;
  const double l = ell;
  if (!(1.0 < beta && beta < alpha && alpha < gamma)) out.emplace_back("need 1 < beta < alpha < gamma");
  if (p < 1) out.emplace_back("p must be a positive integer");
  if (nu < 1) out.emplace_back("nu must be a positive integer");
  if (!(std::pow(beta, -p) * l * l < 1.0)) out.emplace_back("need beta^-p ell^2 < 1");
  if (!((nu + 1.0) * (p + 1.0) * std::pow(alpha, -nu) < 1.0))
    out.emplace_back("need (nu+1)(p+1) alpha^-nu < 1");
  const double d = delta(ell);
  if (!(d > 0.0 && d < 1.0)) out.emplace_back("delta must lie in (0,1)");
  if (N <= nu) out.emplace_back("need N > nu");
  if (!(std::pow(l, nu) * std::pow(alpha, N) < std::pow(gamma, N)))
    out.emplace_back("need ell^nu alpha^n < gamma^n for n >= N");
  const double n_prime = std::ceil(d * N);
  if (!(std::pow(l, -nu) * std::pow(gamma / beta, n_prime) *
            (1.0 - (nu + 1.0) * (p + 1.0) * std::pow(alpha, -nu)) >=
        1.0))
    out.emplace_back("need ell^-nu (gamma/beta)^n' (1 - (nu+1)(p+1) alpha^-nu) >= 1 for n' >= delta N");
  return out;
}

double Bump::derivative(double x) const {
  const double d = std::abs(circle_offset(x, center)) / radius;
  if (d >= 1.0) return 0.0;
  return slope_plateau * (inner_profile(d) - kOuterWeight * outer_profile(d));
}

double Bump::value(double x) const {
  const double u = circle_offset(x, center);
  if (u <= -radius || u >= radius) return 0.0;
  auto integrand = [this](double v) { return derivative(center + v); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, -radius, u, 15,
                                                                         1e-12);
}

double Bump::max_abs_derivative() const { return slope_plateau * std::max(1.0, kOuterWeight); }

std::vector<Bump> uniform_bumps(int m, double slope_plateau) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "need at least one bump");
  std::vector<Bump> out;
  for (int j = 0; j < m; ++j) out.push_back({(j + 0.5) / m, 0.45 / m, slope_plateau});
  return out;
}

PerturbationFamily::PerturbationFamily(TrigPolynomial base, std::vector<Bump> directions, double epsilon)
    : base_(std::move(base)), directions_(std::move(directions)), epsilon_(epsilon) {
  if (!(epsilon >= 0.0)) fail(ErrorCode::InvalidArgument, "parameter box half-width must be >= 0");
  double sup = 0.0;
  for (const auto& b : directions_) {
    if (!(b.radius > 0.0 && b.radius < 0.5)) fail(ErrorCode::InvalidArgument, "bump radius must lie in (0, 1/2)");
    sup += b.max_abs_derivative() * b.radius;
  }
  const double lower = grid_minimum(base_) - epsilon * sup;
  if (!(lower > 0.0))
    fail(ErrorCode::DomainViolation, "perturbed ceiling may fail to be positive on the parameter box",
         {{"lower_bound", lower}});
}

double PerturbationFamily::slope(const Word& b, double x, const std::vector<double>& t) const {
  if (t.size() != directions_.size())
    fail(ErrorCode::InvalidArgument, "parameter vector has the wrong dimension");
  double s = dynamics::birkhoff(base_, b, x, 1);
  for (std::size_t j = 0; j < t.size(); ++j)
    if (t[j] != 0.0) s += t[j] * direction_slope(directions_[j], b, x);
  return s;
}

SlopeClusterReport slope_clusters(const TrigPolynomial& f, const CeilingClass& cls, int n,
                                  const Word& c, double window_factor) {
  const int ell = f.ell();
  if (n < 1) fail(ErrorCode::InvalidArgument, "cluster length must be positive");
  if (std::pow(static_cast<double>(ell), n) > static_cast<double>(1 << 20))
    fail(ErrorCode::ResourceLimit, "ell^n exceeds 2^20 words", {{"n", n}});
  if (c.ell() != ell || c.empty()) fail(ErrorCode::InvalidArgument, "base word must be a nonempty word over the same alphabet");

  SlopeClusterReport rep;
  rep.n = n;
  rep.base_word = c;
  rep.x_c = dynamics::word_interval(c).first;
  rep.window = window_factor * cls.theta_K * std::pow(static_cast<double>(ell), -n);

  const std::size_t total = ipow(ell, n);
  std::vector<std::pair<double, std::size_t>> slopes;
  slopes.reserve(total);
  std::vector<double> inv(n + 1, 1.0);
  for (int k = 1; k <= n; ++k) inv[k] = inv[k - 1] / ell;
  // Depth-first over prefixes, letters in increasing order, so the visit
  // counter is the lexicographic index of the word.
  auto walk = [&](auto&& self, int depth, double y, double acc) -> void {
    if (depth == n) {
      slopes.emplace_back(acc, slopes.size());
      return;
    }
    for (int letter = 1; letter <= ell; ++letter) {
      const double child = (y + letter - 1) / ell;
      self(self, depth + 1, child, acc + inv[depth + 1] * f.eval(child, 1));
    }
  };
  walk(walk, 0, rep.x_c, 0.0);

  std::sort(slopes.begin(), slopes.end());
  std::size_t best = 0, best_lo = 0;
  for (std::size_t lo = 0, hi = 0; lo < slopes.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi + 1 < slopes.size() && slopes[hi + 1].first - slopes[lo].first <= rep.window) ++hi;
    if (hi - lo + 1 > best) {
      best = hi - lo + 1;
      best_lo = lo;
    }
  }
  rep.max_cluster = best;
  std::vector<std::size_t> members;
  members.reserve(best);
  for (std::size_t i = best_lo; i < best_lo + best; ++i) members.push_back(slopes[i].second);
  std::sort(members.begin(), members.end());
  rep.cluster_words.reserve(best);
  for (auto idx : members) rep.cluster_words.push_back(word_from_index(ell, n, idx));
  return rep;
}

ClusterGrowth cluster_growth(const TrigPolynomial& f, const CeilingClass& cls, int n_lo, int n_hi,
                             double window_factor) {
  if (n_hi - n_lo < 2) fail(ErrorCode::InvalidArgument, "growth fit needs at least three lengths");
  ClusterGrowth out;
  std::vector<std::pair<double, double>> samples;
  for (int n = n_lo; n <= n_hi; ++n) {
    const auto rep = slope_clusters(f, cls, n, Word::repeat(f.ell(), 1, n), window_factor);
    out.counts.emplace_back(n, rep.max_cluster);
    samples.emplace_back(n, static_cast<double>(rep.max_cluster));
  }
  const auto fit = transversality::exponent_fit(samples);
  out.rate = fit.rate;
  out.residual = fit.log_residual;
  return out;
}

Eigen::MatrixXd g_matrix(double x, const std::vector<Word>& sigma, const std::vector<Bump>& directions) {
  if (sigma.empty()) fail(ErrorCode::InvalidArgument, "sigma must contain at least one word");
  for (const auto& b : sigma)
    if (b.size() != sigma[0].size() || b.ell() != sigma[0].ell() || b.empty())
      fail(ErrorCode::InvalidArgument, "words of sigma must share one positive length");
  const auto p = static_cast<Eigen::Index>(sigma.size() - 1);
  const auto m = static_cast<Eigen::Index>(directions.size());
  Eigen::MatrixXd L(p, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double base = direction_slope(directions[j], sigma[0], x);
    for (Eigen::Index i = 0; i < p; ++i) L(i, j) = direction_slope(directions[j], sigma[i + 1], x) - base;
  }
  return L;
}

Eigen::MatrixXd g_matrix(double x, const std::vector<Word>& sigma, const PerturbationFamily& family) {
  return g_matrix(x, sigma, family.directions());
}

double jacobian(const Eigen::MatrixXd& L) {
  if (L.rows() > L.cols()) fail(ErrorCode::InvalidArgument, "Jacobian needs p <= m");
  if (L.rows() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 1e-12 * std::max(1.0, sv[0])) return 0.0;
  return sv.prod();
}

int default_mu(int ell, int nu, int p) {
  const double target = 1.0 / (4.0 * p);
  const double factor = 2.0 / (1.0 - 1.0 / ell);
  int mu = nu + 1;
  while (factor * std::pow(static_cast<double>(ell), nu - mu) > target) ++mu;
  return mu;
}

namespace {

struct LevelPoints {
  std::vector<Word> words;
  std::vector<double> centers;
  std::vector<std::vector<double>> prefix_points;  // [a][j] = [a]_j(y), j = 0..nu
};

LevelPoints level_points(int ell, double y, int nu) {
  if (nu < 1) fail(ErrorCode::InvalidArgument, "nu must be positive");
  if (std::pow(static_cast<double>(ell), nu) > 1024.0)
    fail(ErrorCode::ResourceLimit, "ell^nu exceeds 1024 bumps", {{"nu", nu}});
  LevelPoints lp;
  const std::size_t count = ipow(ell, nu);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Word a = word_from_index(ell, nu, idx);
    std::vector<double> pts{y};
    double z = y;
    for (std::size_t k = 0; k < a.size(); ++k) {
      z = (z + a[k] - 1) / ell;
      pts.push_back(z);
    }
    lp.centers.push_back(z);
    lp.prefix_points.push_back(std::move(pts));
    lp.words.push_back(std::move(a));
  }
  return lp;
}

// tau^i(a(y)) for i >= 0: a prefix point while i <= nu, forward orbit of y after.
double forward_image(const LevelPoints& lp, const std::vector<double>& orbit, std::size_t a, int i, int nu) {
  if (i <= nu) return lp.prefix_points[a][nu - i];
  return orbit[i - nu];
}

std::vector<double> forward_orbit(int ell, double y, int steps) {
  std::vector<double> orbit{y};
  for (int j = 0; j < steps; ++j) orbit.push_back(dynamics::tau(ell, orbit.back()));
  return orbit;
}

constexpr double kOrderTolerance = 1e-9;

// precedes[a][b]: tau^q(b(y)) = a(y) for some q >= 0.
std::vector<std::vector<bool>> order_relation(const LevelPoints& lp, const std::vector<double>& orbit,
                                              int nu, int q_max) {
  const std::size_t m = lp.words.size();
  std::vector<std::vector<bool>> rel(m, std::vector<bool>(m, false));
  for (std::size_t b = 0; b < m; ++b)
    for (int q = 0; q <= q_max; ++q) {
      const double img = forward_image(lp, orbit, b, q, nu);
      for (std::size_t a = 0; a < m; ++a)
        if (circle_distance(img, lp.centers[a]) <= kOrderTolerance) rel[a][b] = true;
    }
  return rel;
}

double admissible_eps0(int ell, const LevelPoints& lp, const std::vector<double>& orbit,
                       const std::vector<std::vector<bool>>& rel, int nu, int mu) {
  double best = 0.5;
  const double l = ell;
  for (std::size_t b = 0; b < lp.words.size(); ++b)
    for (int i = 1; i <= mu; ++i) {
      const double img = forward_image(lp, orbit, b, i, nu);
      const double spread = std::pow(l, i - nu) + std::pow(l, -nu);
      for (std::size_t a = 0; a < lp.words.size(); ++a) {
        if (rel[a][b]) continue;
        best = std::min(best, circle_distance(img, lp.centers[a]) / spread);
      }
    }
  return best;
}

}  // namespace

double max_admissible_eps0(int ell, double y, int nu, int mu) {
  const auto lp = level_points(ell, y, nu);
  const auto orbit = forward_orbit(ell, y, mu + nu);
  const auto rel = order_relation(lp, orbit, nu, mu + nu);
  return admissible_eps0(ell, lp, orbit, rel, nu, mu);
}

BumpFamily bump_family(int ell, double y, int nu, double eps0, int mu, double scale) {
  if (mu <= nu) fail(ErrorCode::InvalidArgument, "mu must exceed nu");
  if (!(scale > 0.0)) fail(ErrorCode::InvalidArgument, "bump scale must be positive");
  const auto lp = level_points(ell, y, nu);
  const auto orbit = forward_orbit(ell, y, mu + nu);
  const auto rel = order_relation(lp, orbit, nu, mu + nu);
  const double admissible = admissible_eps0(ell, lp, orbit, rel, nu, mu);
  if (!(eps0 > 0.0 && eps0 <= admissible))
    fail(ErrorCode::InvalidArgument, "eps0 too large: bump supports collide under tau",
         {{"eps0", eps0}, {"max_admissible_eps0", admissible}});

  BumpFamily fam;
  fam.y = y;
  fam.nu = nu;
  fam.mu = mu;
  fam.eps0 = eps0;
  fam.scale = scale;
  fam.words = lp.words;
  const double radius = eps0 * std::pow(static_cast<double>(ell), -nu);
  const double plateau = scale * std::pow(static_cast<double>(ell), nu);
  for (double c : lp.centers) fam.bumps.push_back({c, radius, plateau});
  const std::size_t m = lp.words.size();
  fam.predecessors.assign(m, 0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (rel[a][b]) {
        if (a != b) fam.order.emplace_back(a, b);
      }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (rel[b][a]) ++fam.predecessors[a];
  return fam;
}

std::vector<std::size_t> maximal_elements(const BumpFamily& family, const std::vector<std::size_t>& subset) {
  std::vector<std::size_t> out;
  for (auto a : subset) {
    bool maximal = true;
    for (const auto& [lo, hi] : family.order)
      if (lo == a && hi != a && std::find(subset.begin(), subset.end(), hi) != subset.end()) {
        maximal = false;
        break;
      }
    if (maximal) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplitMix64::SplitMix64(std::uint64_t seed, std::uint64_t index) : state_(mix(seed ^ mix(index + 1))) {}

std::uint64_t SplitMix64::next() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix(state_);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (phat + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

ProbeResult bad_set_probe(const PerturbationFamily& family, const CeilingClass& cls, int n,
                          std::size_t samples, const GenericityParams& params, std::uint64_t seed,
                          const Exec& exec) {
  const int ell = family.base().ell();
  if (n < 1) fail(ErrorCode::InvalidArgument, "probe length must be positive");
  if (params.p < 1) fail(ErrorCode::InvalidArgument, "p must be a positive integer");
  if (samples == 0) fail(ErrorCode::InvalidArgument, "probe needs at least one sample");
  if (samples > (std::size_t{1} << 24)) fail(ErrorCode::ResourceLimit, "probe limited to 2^24 samples");
  const std::size_t m = family.size();
  const int p = params.p;
  ProbeResult res;
  res.samples = samples;
  res.window = 10.0 * cls.theta_K * std::pow(static_cast<double>(ell), -n);

  // 0 = miss, 1 = hit, 2 = rejected by the Jacobian filter.
  std::vector<std::uint8_t> outcome(samples, 0);
  parallel_for(exec, samples, [&](std::size_t k) {
    SplitMix64 rng(seed, k);
    std::vector<double> t(m);
    for (auto& tj : t) tj = family.epsilon() * (2.0 * rng.uniform() - 1.0);
    auto draw_word = [&] {
      std::vector<std::uint8_t> letters(n);
      for (auto& l : letters) l = static_cast<std::uint8_t>(1 + rng.next() % ell);
      return Word(ell, std::move(letters));
    };
    const Word c = draw_word();
    std::vector<Word> sigma;
    for (int i = 0; i <= p; ++i) sigma.push_back(draw_word());
    const double x = dynamics::word_interval(c).first;
    if (m > 0) {
      const double jac = m < static_cast<std::size_t>(p) ? 0.0 : jacobian(g_matrix(x, sigma, family));
      if (jac < 1.0) {
        outcome[k] = 2;
        return;
      }
    }
    const double s0 = family.slope(sigma[0], x, t);
    for (int i = 1; i <= p; ++i)
      if (std::abs(family.slope(sigma[i], x, t) - s0) > res.window) return;
    outcome[k] = 1;
  });
  for (auto o : outcome) {
    if (o == 1) ++res.hits;
    if (o == 2) ++res.jac_rejected;
  }
  res.accepted = samples - res.jac_rejected;
  res.fraction = res.accepted == 0 ? 0.0 : static_cast<double>(res.hits) / static_cast<double>(res.accepted);
  std::tie(res.ci_low, res.ci_high) = wilson_interval(res.hits, res.accepted);
  return res;
}

}  // namespace suspflow::genericity
