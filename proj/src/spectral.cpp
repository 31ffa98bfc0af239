#include "suspflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "suspflow/dynamics.hpp"
#include "suspflow/error.hpp"
#include "suspflow/smooth_step.hpp"

namespace suspflow::spectral {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Korobov generator close to n / golden ratio and coprime to n.
int korobov_generator(int n) {
  int g = static_cast<int>(std::lround(n / std::numbers::phi));
  g = std::max(1, g);
  while (std::gcd(g, n) != 1) ++g;
  return g;
}

bool by_modulus(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

void finalize(SpectrumReport& rep, std::vector<std::complex<double>> values, int k) {
  std::sort(values.begin(), values.end(), by_modulus);
  if (static_cast<int>(values.size()) > k) values.resize(k);
  rep.multiplicity.assign(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    int count = 0;
    for (const auto& other : values)
      if (std::abs(other - values[i]) <= 1e-8 * std::max(1.0, std::abs(values[i]))) ++count;
    rep.multiplicity[i] = count;
  }
  rep.eigenvalues = std::move(values);
}

Eigen::MatrixXd to_dense(const UlamOperator& op) { return Eigen::MatrixXd(op.matrix); }

}  // namespace

BoxPartition::BoxPartition(const TrigPolynomial& f, int nx, int ns) : f_(f), nx_(nx), ns_(ns) {
  if (nx < 1 || ns < 1) fail(ErrorCode::InvalidArgument, "box partition needs positive sizes");
  static constexpr double nodes[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                      0.5384693101056831, 0.9061798459386640};
  static constexpr double weights[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                        0.4786286704993665, 0.2369268850561891};
  measure_.resize(size());
  for (int i = 0; i < nx; ++i) {
    const double mid = (i + 0.5) / nx;
    const double half = 0.5 / nx;
    double column = 0.0;
    for (int q = 0; q < 5; ++q) column += weights[q] * f(mid + half * nodes[q]);
    column *= half;
    for (int j = 0; j < ns; ++j) measure_[index(i, j)] = column / ns;
  }
}

std::size_t BoxPartition::index_of(double x, double s) const {
  int i = static_cast<int>(std::floor(x * nx_));
  i = std::clamp(i, 0, nx_ - 1);
  int j = static_cast<int>(std::floor(ns_ * s / f_(x)));
  j = std::clamp(j, 0, ns_ - 1);
  return index(i, j);
}

double BoxPartition::total_measure() const {
  return std::accumulate(measure_.begin(), measure_.end(), 0.0);
}

UlamOperator build_ulam(const TrigPolynomial& f, double t, int nx, int ns, int points_per_box,
                        std::uint64_t seed, Sampling sampling, const Exec& exec) {
  if (t < 0.0) fail(ErrorCode::InvalidArgument, "time must be non-negative");
  if (points_per_box < 16) fail(ErrorCode::InvalidArgument, "need at least 16 points per box");
  const std::size_t boxes = static_cast<std::size_t>(nx) * ns;
  if (nx < 1 || ns < 1 || boxes > (std::size_t{1} << 16))
    fail(ErrorCode::ResourceLimit, "Ulam partition limited to 2^16 boxes", {{"boxes", boxes}});
  if (boxes * static_cast<std::size_t>(points_per_box) > (std::size_t{1} << 28))
    fail(ErrorCode::ResourceLimit, "Ulam sample budget exceeds 2^28 points");

  BoxPartition part(f, nx, ns);
  const int g = korobov_generator(points_per_box);
  std::vector<std::vector<std::pair<int, int>>> columns(boxes);  // (row, count)

  parallel_for(exec, boxes, [&](std::size_t col) {
    const int i = static_cast<int>(col) / ns;
    const int j = static_cast<int>(col) % ns;
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(col)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> rows;
    rows.reserve(points_per_box);
    for (int k = 0; k < points_per_box; ++k) {
      double u1, u2;
      if (sampling == Sampling::Lattice) {
        u1 = (k + 0.5) / points_per_box;
        const double v = (static_cast<double>(static_cast<long long>(k) * g % points_per_box) + 0.5) /
                         points_per_box;
        u2 = v;
      } else {
        u1 = unit(rng);
        u2 = unit(rng);
      }
      const double x = (i + u1) / nx;
      const double s = f(x) * (j + u2) / ns;
      const auto image = dynamics::time_t_map(f, {x, s}, t);
      rows.push_back(static_cast<int>(part.index_of(image.x, image.s)));
    }
    std::sort(rows.begin(), rows.end());
    auto& out = columns[col];
    for (std::size_t a = 0; a < rows.size();) {
      std::size_t b = a;
      while (b < rows.size() && rows[b] == rows[a]) ++b;
      out.emplace_back(rows[a], static_cast<int>(b - a));
      a = b;
    }
  });

  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t col = 0; col < boxes; ++col)
    for (const auto& [row, count] : columns[col])
      triplets.emplace_back(row, static_cast<int>(col), static_cast<double>(count) / points_per_box);

  UlamOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(boxes), static_cast<Eigen::Index>(boxes));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  op.nx = nx;
  op.ns = ns;
  op.points_per_box = points_per_box;
  op.seed = seed;
  op.sampling = sampling;
  op.tag = {f.descriptor(), t};
  return op;
}

namespace {

SpectrumReport arnoldi(const UlamOperator& op, int k) {
  const Eigen::Index n = op.matrix.rows();
  const Eigen::Index m = std::min<Eigen::Index>(n, std::max<Eigen::Index>(4 * k, 80));
  Eigen::VectorXd start = Eigen::VectorXd::Constant(n, 1.0);
  // A deterministic perturbation so the start vector is not confined to an
  // invariant subspace of symmetric test matrices.
  for (Eigen::Index i = 0; i < n; ++i) start[i] += 1e-3 * std::sin(1.0 + 0.7 * static_cast<double>(i));
  start.normalize();

  SpectrumReport rep;
  rep.method = "arnoldi";
  constexpr int kMaxRestarts = 300;
  double worst = 0.0;
  for (int restart = 0; restart < kMaxRestarts; ++restart) {
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    V.col(0) = start;
    Eigen::Index built = m;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXd w = op.matrix * V.col(j);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          const double h = V.col(i).dot(w);
          H(i, j) += h;
          w -= h * V.col(i);
        }
      }
      H(j + 1, j) = w.norm();
      if (H(j + 1, j) < 1e-13) {
        built = j + 1;
        break;
      }
      V.col(j + 1) = w / H(j + 1, j);
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(built, built), true);
    if (es.info() != Eigen::Success)
      fail(ErrorCode::NumericalFailure, "Hessenberg eigensolve failed", {{"restart", restart}});
    std::vector<Eigen::Index> order(built);
    std::iota(order.begin(), order.end(), 0);
    const auto vals = es.eigenvalues();
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return by_modulus(vals[a], vals[b]); });
    const Eigen::Index want = std::min<Eigen::Index>(k, built);
    const double beta = built < m ? 0.0 : H(built, built - 1);
    worst = 0.0;
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
    std::vector<std::complex<double>> ritz;
    for (Eigen::Index r = 0; r < want; ++r) {
      const auto idx = order[r];
      const Eigen::VectorXcd y = es.eigenvectors().col(idx);
      const double resid = beta * std::abs(y[built - 1]);
      worst = std::max(worst, resid / std::max(1.0, std::abs(vals[idx])));
      ritz.push_back(vals[idx]);
      const Eigen::VectorXcd x = V.leftCols(built).cast<std::complex<double>>() * y;
      next += x.real() + x.imag();
    }
    rep.iterations = restart + 1;
    if (worst < 1e-9 || built < m) {
      finalize(rep, std::move(ritz), k);
      return rep;
    }
    start = next.normalized();
  }
  fail(ErrorCode::NumericalFailure, "Arnoldi iteration did not converge",
       {{"restarts", kMaxRestarts}, {"max_relative_residual", worst}});
}

}  // namespace

SpectrumReport spectrum(const UlamOperator& op, int k, std::size_t dense_limit) {
  if (k < 1 || k > 32) fail(ErrorCode::InvalidArgument, "k must lie in 1..32");
  const auto n = static_cast<std::size_t>(op.matrix.rows());
  SpectrumReport rep;
  if (n <= dense_limit || static_cast<std::size_t>(k) >= n) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_dense(op), false);
    if (es.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "dense eigensolve failed");
    std::vector<std::complex<double>> values(es.eigenvalues().begin(), es.eigenvalues().end());
    rep.method = "dense";
    finalize(rep, std::move(values), k);
  } else {
    rep = arnoldi(op, k);
  }
  rep.tag = op.tag;
  return rep;
}

std::vector<double> leading_eigenvector(const UlamOperator& op) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_dense(op), true);
  if (es.info() != Eigen::Success) fail(ErrorCode::NumericalFailure, "dense eigensolve failed");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) < std::abs(es.eigenvalues()[best] - 1.0)) best = i;
  const Eigen::VectorXd v = es.eigenvectors().col(best).real();
  const double total = v.sum();
  std::vector<double> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i] / total;
  return out;
}

double Observable::operator()(const TrigPolynomial& f, double x, double s) const {
  auto trig = [](Trig kind, double arg) {
    switch (kind) {
      case Trig::One: return 1.0;
      case Trig::Cos: return std::cos(arg);
      case Trig::Sin: return std::sin(arg);
    }
    return 1.0;
  };
  double sum = 0.0;
  for (const auto& term : terms)
    sum += term.coeff * trig(term.fx, kTwoPi * term.kx * x) * trig(term.fs, kTwoPi * term.ks * s);
  if (cutoff) {
    const double height = f(x);
    sum *= smooth_step(s / margin) * smooth_step((height - s) / margin);
  }
  return sum;
}

Observable Observable::constant(double c) {
  Observable o;
  o.terms.push_back({c, 0, Trig::One, 0.0, Trig::One});
  o.id = "constant";
  return o;
}

namespace {

struct QuadratureGrid {
  std::vector<dynamics::FlowPoint> points;
  std::vector<double> weights;  // normalized to sum 1
};

QuadratureGrid midpoint_grid(const TrigPolynomial& f, int nx, int ns) {
  QuadratureGrid q;
  q.points.reserve(static_cast<std::size_t>(nx) * ns);
  double total = 0.0;
  for (int i = 0; i < nx; ++i) {
    const double x = (i + 0.5) / nx;
    const double height = f(x);
    for (int j = 0; j < ns; ++j) {
      q.points.push_back({x, height * (j + 0.5) / ns});
      q.weights.push_back(height);
      total += height;
    }
  }
  for (auto& w : q.weights) w /= total;
  return q;
}

Observable resolved(const TrigPolynomial& f, Observable obs) {
  if (obs.cutoff && obs.margin <= 0.0) {
    double fmin = f(0.0);
    for (int i = 1; i < 4096; ++i) fmin = std::min(fmin, f(i / 4096.0));
    obs.margin = 0.05 * fmin;
  }
  return obs;
}

}  // namespace

double observable_mean(const TrigPolynomial& f, const Observable& obs_in, int nx, int ns) {
  const Observable obs = resolved(f, obs_in);
  const auto q = midpoint_grid(f, nx, ns);
  double mean = 0.0;
  for (std::size_t i = 0; i < q.points.size(); ++i)
    mean += q.weights[i] * obs(f, q.points[i].x, q.points[i].s);
  return mean;
}

CorrelationCurve correlation(const TrigPolynomial& f, const Observable& psi_in,
                             const Observable& phi_in, const std::vector<double>& t_list, int nx,
                             int ns, const Exec& exec) {
  if (nx < 1 || ns < 1) fail(ErrorCode::InvalidArgument, "quadrature grid must be positive");
  if (static_cast<std::size_t>(nx) * ns > (std::size_t{1} << 24))
    fail(ErrorCode::ResourceLimit, "correlation grid limited to 2^24 points");
  const Observable psi = resolved(f, psi_in);
  const Observable phi = resolved(f, phi_in);
  const auto q = midpoint_grid(f, nx, ns);
  const std::size_t n = q.points.size();

  std::vector<double> psi_values(n);
  double psi_mean = 0.0;
  double phi_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    psi_values[i] = psi(f, q.points[i].x, q.points[i].s);
    psi_mean += q.weights[i] * psi_values[i];
    phi_mean += q.weights[i] * phi(f, q.points[i].x, q.points[i].s);
  }
  const double psi_shift = psi.center ? psi_mean : 0.0;
  const double phi_shift = phi.center ? phi_mean : 0.0;
  for (auto& v : psi_values) v -= psi_shift;
  psi_mean -= psi_shift;
  phi_mean -= phi_shift;

  CorrelationCurve curve;
  curve.psi_id = psi.id;
  curve.phi_id = phi.id;
  curve.tag = {f.descriptor(), 0.0};
  curve.samples.resize(t_list.size());
  parallel_for(exec, t_list.size(), [&](std::size_t ti) {
    const double t = t_list[ti];
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto image = dynamics::time_t_map(f, q.points[i], t);
      acc += q.weights[i] * psi_values[i] * (phi(f, image.x, image.s) - phi_shift);
    }
    curve.samples[ti] = {t, acc - phi_mean * psi_mean};
  });
  return curve;
}

DecayFit decay_fit(const CorrelationCurve& curve) {
  std::vector<std::pair<double, double>> samples;
  for (const auto& [t, v] : curve.samples)
    if (std::abs(v) > 0.0) samples.emplace_back(t, std::abs(v));
  const auto fit = transversality::exponent_fit(samples);
  return {fit.rate, fit.log_residual, samples.size(), curve.tag};
}

ResonanceComparison resonance_compare(const SpectrumReport& spec, const DecayFit& fit,
                                      const transversality::TransversalityEstimate& m_estimate,
                                      const SourceTag& m_tag, double slack) {
  if (spec.tag.ceiling != fit.tag.ceiling || spec.tag.ceiling != m_tag.ceiling)
    fail(ErrorCode::InvalidArgument, "spectrum, decay fit and m estimate come from different ceilings");
  if (spec.tag.t != m_estimate.t || m_tag.t != m_estimate.t)
    fail(ErrorCode::InvalidArgument, "spectrum and m estimate computed at different times");
  if (!(m_estimate.t > 0.0)) fail(ErrorCode::InvalidArgument, "comparison needs t > 0");
  ResonanceComparison out;
  out.lambda2_abs = spec.eigenvalues.size() > 1 ? std::abs(spec.eigenvalues[1]) : 0.0;
  out.fitted_rate = fit.rate;
  out.m_bound = std::pow(m_estimate.m_value, 1.0 / (2.0 * m_estimate.t));
  out.slack = slack;
  out.fit_within_bound = out.fitted_rate <= out.m_bound + slack;
  return out;
}

}  // namespace suspflow::spectral
