// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracle_values.hpp"
#include "suspflow/aniso.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/error.hpp"
#include "suspflow/experiment.hpp"
#include "suspflow/genericity.hpp"
#include "suspflow/mixing.hpp"
#include "suspflow/spectral.hpp"
#include "suspflow/transversality.hpp"

using namespace suspflow;
using namespace fixtures;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Random positive trigonometric polynomial with ell in {2, 3}.
TrigPolynomial random_ceiling(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int ell = 2 + static_cast<int>(rng() % 2);
  const int terms = static_cast<int>(rng() % 4);
  std::vector<Harmonic> hs;
  double amp = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const Harmonic h{k, 0.15 * u(rng) / k, 0.15 * u(rng) / k};
    amp += std::abs(h.cos_coeff) + std::abs(h.sin_coeff);
    hs.push_back(h);
  }
  return {ell, 0.8 + amp + 0.5 * (u(rng) + 1.0), hs};
}

// 1. sum over inverse branches of 1/E equals 1.
Outcome branch_sum_identity() {
  Outcome out;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t cap = std::size_t{1} << 16;
  double worst = 0.0;
  std::size_t largest = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_ceiling(rng);
    const double x = u(rng);
    const double s = f(x) * u(rng);
    double t = 14.0 * u(rng);
    std::size_t count = 0;
    double sum = 0.0;
    auto visit = [&](const std::vector<std::uint8_t>&, int level, double, double, double) {
      ++count;
      sum += std::pow(static_cast<double>(f.ell()), -level);
    };
    try {
      dynamics::for_each_branch(f, {x, s}, t, cap, visit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ResourceLimit) throw;
      t = e.detail()["admissible_t"].get<double>();
      count = 0;
      sum = 0.0;
      dynamics::for_each_branch(f, {x, s}, t, cap, visit);
    }
    largest = std::max(largest, count);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  out.require(worst <= 1e-10, "max |sum 1/E - 1| <= 1e-10");
  out.note("max |sum 1/E - 1| = " + fmt("%.3g", worst) + " over 100 cases, largest count " +
           std::to_string(largest));
  return out;
}

// 2. constant ceiling f = 1, ell = 2.
Outcome constant_ceiling() {
  Outcome out;
  const auto f = one();
  const auto cls = ceiling::classify(f, 0.9);
  for (double t : {2.5, 4.2, 8.0}) {
    const auto e = transversality::m_of_t(f, cls, t, 16, 4, true);
    out.require(e.m_value == 1.0 && e.m_upper == 1.0, "m(f," + fmt("%g", t) + ") == 1");
  }
  const auto lm = transversality::lambda_min(f, transversality::LambdaMethod::Periodic, 1.0);
  out.require(lm.value == 2.0, "lambda_min == 2");
  const auto wm = mixing::weak_mixing_test(f);
  out.require(wm.decision.verdict == mixing::Verdict::NotWeaklyMixing, "verdict NotWeaklyMixing");
  out.require(wm.decision.residual <= 1e-12, "residual <= 1e-12");
  const double defect = mixing::eigenfunction_check(wm.report, f, {0.7, 1.3}, wm.decision.tol_strict);
  out.require(defect <= 1e-10, "eigenfunction defect <= 1e-10");
  out.note("lambda_min = " + fmt("%.17g", lm.value) + ", residual = " + fmt("%.3g", wm.decision.residual) +
           ", defect = " + fmt("%.3g", defect));
  return out;
}

double window_max(const spectral::CorrelationCurve& c, double lo, double hi) {
  double m = 0.0;
  for (const auto& [t, v] : c.samples)
    if (t >= lo - 1e-9 && t <= hi + 1e-9) m = std::max(m, std::abs(v));
  return m;
}

spectral::Observable cos_s() {
  spectral::Observable o;
  o.terms = {{1.0, 0, spectral::Observable::Trig::One, 1.0, spectral::Observable::Trig::Cos}};
  o.center = true;
  o.id = "cos_s";
  return o;
}

// 3. coboundary round trip.
Outcome coboundary_round_trip() {
  Outcome out;
  const auto f = coboundary();
  auto rep = mixing::cobounding_potential(f, 4096, 24);
  double worst = 0.0;
  for (std::size_t j = 0; j < rep.psi.size(); ++j) {
    const double x = static_cast<double>(j) / rep.psi.size();
    worst = std::max(worst, std::abs(rep.psi[j] - 0.1 * pi * std::cos(2 * pi * x)));
  }
  out.require(worst <= rep.tail_bound + 1e-8, "psi matches Psi' within tail + 1e-8");
  const double residual = mixing::cocycle_residual(rep, f);
  out.require(residual <= 1e-8, "cocycle residual <= 1e-8");
  const auto decision = mixing::classify_residual(residual, mixing::default_tolerances(f, 24));
  out.require(decision.verdict == mixing::Verdict::NotWeaklyMixing, "verdict NotWeaklyMixing");
  std::vector<double> ts;
  for (int i = 0; i <= 110; ++i) ts.push_back(0.1 * i);
  const auto curve = spectral::correlation(f, cos_s(), cos_s(), ts, 128, 32);
  const double early = window_max(curve, 0.0, 1.0), late = window_max(curve, 10.0, 11.0);
  out.require(late >= 0.5 * early, "late-window max >= 0.5 early-window max");
  out.note("psi error = " + fmt("%.3g", worst) + ", residual = " + fmt("%.3g", residual) +
           ", correlation early/late = " + fmt("%.4f", early) + "/" + fmt("%.4f", late));
  return out;
}

std::vector<std::pair<double, double>> m_samples(const TrigPolynomial& f, const ceiling::CeilingClass& cls,
                                                 const std::vector<double>& ts, int nx, int ns) {
  std::vector<std::pair<double, double>> out;
  for (double t : ts) out.emplace_back(t, transversality::m_of_t(f, cls, t, nx, ns, false).m_value);
  return out;
}

// 4. the weakly mixing example f = 1 + 0.2 sin(2 pi x).
Outcome weakly_mixing_example() {
  Outcome out;
  const auto f = sine();
  const auto cls = ceiling::classify(f, 0.9);
  const auto wm = mixing::weak_mixing_test(f, std::nullopt, 4096, 24);
  double psi_max = 0.0;
  for (double v : wm.report.psi.values()) psi_max = std::max(psi_max, std::abs(v));
  out.require(psi_max <= 1e-10, "psi == 0 within 1e-10");
  out.require(std::abs(wm.decision.residual - 0.2) <= 1e-6, "residual = 0.2 +- 1e-6");
  out.require(wm.decision.verdict == mixing::Verdict::WeaklyMixing, "verdict WeaklyMixing");
  const auto e = transversality::m_of_t(f, cls, 12.0, 64, 8, true);
  out.require(e.m_value < 1.0 && std::abs(e.m_value - oracle::m_of_t_f1_t12_value) <= 1e-12,
              "m(f,12) < 1 and equal to the enumeration oracle");
  const auto fit = transversality::exponent_fit(m_samples(f, cls, {2, 4, 6, 8}, 32, 4));
  out.require(fit.rate < 1.0, "fitted m-rate < 1");
  out.note("max|psi| = " + fmt("%.3g", psi_max) + ", residual = " + fmt("%.9f", wm.decision.residual) +
           ", m(f,12) = " + fmt("%.6g", e.m_value) + ", fitted rate = " + fmt("%.4f", fit.rate));
  return out;
}

struct SuiteEntry {
  std::string name;
  TrigPolynomial f;
};

std::vector<SuiteEntry> dichotomy_suite() {
  return {{"const-1", one()},
          {"const-1.5-ell3", TrigPolynomial::constant(3, 1.5)},
          {"cob-sin", coboundary()},
          {"cob-ell3", TrigPolynomial::coboundary({3, 0.0, {{1, 0.0, 0.05}}}, 1.0)},
          {"sine", sine()},
          {"generic", generic()}};
}

// 5. residual verdict agrees with the m(f,t) trend.
Outcome dichotomy() {
  Outcome out;
  for (const auto& [name, f] : dichotomy_suite()) {
    const auto cls = ceiling::classify(f, 0.9);
    const auto verdict = mixing::weak_mixing_test(f).decision.verdict;
    const double rate = transversality::exponent_fit(m_samples(f, cls, {2, 4, 6, 8}, 16, 4)).rate;
    const bool not_mixing = verdict == mixing::Verdict::NotWeaklyMixing;
    out.require(verdict != mixing::Verdict::Inconclusive, name + " verdict conclusive");
    out.require((rate >= 0.99) == not_mixing, name + " trend agrees with verdict");
    out.note(name + " " + mixing::to_string(verdict) + " rate " + fmt("%.4f", rate));
  }
  return out;
}

// 6. m(f, s) <= n(f, t) + slack at s = (b/a) t + b.
Outcome cross_bound() {
  Outcome out;
  for (const auto& [name, f] : std::vector<SuiteEntry>{{"sine", sine()}, {"generic", generic()}}) {
    const auto cls = ceiling::classify(f, 0.9);
    const double a = cls.f_min, b = cls.f_max;
    for (double t : {4.0, 6.0}) {
      const double s = (b / a) * t + b;
      const auto m = transversality::m_of_t(f, cls, s, 8, 2, false);
      const auto [nv, nu] = transversality::n_of_t(f, cls, t, 8, 2, 16);
      out.require(m.m_value <= nv + (nu - nv), name + " t=" + fmt("%g", t));
      out.note(name + " t=" + fmt("%g", t) + ": m(s=" + fmt("%.3f", s) + ") = " + fmt("%.4g", m.m_value) +
               " <= n = " + fmt("%.4g", nv) + " + " + fmt("%.3g", nu - nv));
    }
  }
  return out;
}

// 7. Ulam sanity.
Outcome ulam_sanity() {
  Outcome out;
  double worst_gap = 0.0;
  const std::vector<std::pair<TrigPolynomial, double>> builds{
      {one(), 1.0}, {sine(), 4.0}, {generic(), 2.0}, {coboundary(), 3.0}, {sine(3), 1.5}};
  for (const auto& [f, t] : builds) {
    const auto op = spectral::build_ulam(f, t, 32, 4, 64);
    const auto rep = spectral::spectrum(op, 4);
    worst_gap = std::max(worst_gap, std::abs(rep.eigenvalues[0] - 1.0));
  }
  out.require(worst_gap <= 1e-2, "leading eigenvalue within 1e-2 of 1");
  const int nx = 64, ppb = 64;
  const auto op = spectral::build_ulam(one(), 1.0, nx, 1, ppb);
  const Eigen::MatrixXd m = Eigen::MatrixXd(op.matrix);
  double worst = 0.0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j) {
      const double closed = (i == (2 * j) % nx || i == (2 * j + 1) % nx) ? 0.5 : 0.0;
      worst = std::max(worst, std::abs(m(i, j) - closed));
    }
  out.require(worst <= 2.0 / std::sqrt(ppb), "doubling matrix within 2/sqrt(points_per_box)");
  out.note("max |lambda_1 - 1| = " + fmt("%.3g", worst_gap) + ", doubling entry error = " + fmt("%.3g", worst));
  return out;
}

// 8. anisotropic norms.
Outcome anisotropic_norms() {
  Outcome out;
  const aniso::Polarization theta({-0.5, 0.5}, {2.0, -2.0});
  const int n = 64;
  const double h = 0.125;
  const double pou = aniso::partition_of_unity_error(theta, n, h);
  out.require(pou <= 1e-12, "partition of unity <= 1e-12");
  double ratio = 0.0;
  bool dominated = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto u = aniso::random_function(n, h, seed);
    const auto strong = aniso::aniso_norm(u, theta, aniso::strong_params());
    const auto weak = aniso::aniso_norm(u, theta, aniso::weak_params(0.25));
    ratio = std::max(ratio, u.l2_norm() / strong.total);
    dominated = dominated && weak.total <= strong.total;
  }
  out.require(ratio <= std::sqrt(6.0), "embedding ratio <= sqrt 6");
  out.require(dominated, "weak norm <= strong norm");
  const aniso::ConeSpec cu{0.1, 0.2}, cv{0.5, 0.6};
  const auto u = aniso::restrict_to_cone(aniso::random_function(n, h, 1000003), cu);
  const auto v = aniso::restrict_to_cone(aniso::random_function(n, h, 2000003), cv);
  const double ortho = aniso::transversal_orthogonality(u, v, theta, cu, cv);
  out.require(ortho <= 1e-12, "transversal orthogonality <= 1e-12");
  out.note("partition error = " + fmt("%.3g", pou) + ", max ratio = " + fmt("%.4f", ratio) +
           ", orthogonality = " + fmt("%.3g", ortho));
  return out;
}

// 9. genericity.
Outcome genericity_checks() {
  Outcome out;
  const int ell = 2, nu = 6, p = 3;
  const double y = 0.3;
  const int mu = genericity::default_mu(ell, nu, p);
  const double eps0 = genericity::max_admissible_eps0(ell, y, nu, mu);
  const auto fam = genericity::bump_family(ell, y, nu, eps0, mu);
  std::vector<std::size_t> A((nu + 1) * (p + 1));
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = i;
  auto top = genericity::maximal_elements(fam, A);
  top.resize(p + 1);
  genericity::SplitMix64 rng(0, 0xb0b);
  double min_jac = INFINITY;
  bool base_free = true;
  const genericity::PerturbationFamily fam_one(one(), fam.bumps, 1e-3), fam_gen(generic(), fam.bumps, 1e-3);
  for (int k = 0; k < 20; ++k) {
    const double x = y + (eps0 / 3.0) * (2.0 * (k + 0.5) / 20 - 1.0);
    std::vector<dynamics::Word> sigma;
    for (auto idx : top) {
      std::vector<std::uint8_t> tail(4);
      for (auto& l : tail) l = static_cast<std::uint8_t>(1 + rng.next() % ell);
      sigma.push_back(fam.words[idx].concat(dynamics::Word(ell, tail)));
    }
    const auto L = genericity::g_matrix(x, sigma, fam_one);
    min_jac = std::min(min_jac, genericity::jacobian(L));
    base_free = base_free && L == genericity::g_matrix(x, sigma, fam_gen);
  }
  out.require(min_jac >= 1.0, "Jac >= 1 at 20 points");
  out.require(base_free, "g_matrix independent of the base ceiling");
  const auto c1 = ceiling::classify(one(), 0.9);
  bool full = true;
  for (int n = 6; n <= 14; ++n)
    full = full && genericity::slope_clusters(one(), c1, n, dynamics::Word::repeat(2, 1, n)).max_cluster ==
                       (std::size_t{1} << n);
  out.require(full, "constant ceiling clusters equal ell^n");
  out.note("min Jac = " + fmt("%.4g", min_jac));
  const std::vector<std::pair<TrigPolynomial, const std::array<long long, 9>*>> suite{
      {sine(), &oracle::clusters_f1}, {generic(), &oracle::clusters_f3}};
  for (const auto& [f, pinned] : suite) {
    const auto cls = ceiling::classify(f, 0.9);
    const auto g = genericity::cluster_growth(f, cls, 6, 14);
    bool match = true;
    for (std::size_t i = 0; i < g.counts.size(); ++i) match = match && static_cast<long long>(g.counts[i].second) == (*pinned)[i];
    const double last = std::pow(static_cast<double>(g.counts.back().second), 1.0 / 14.0);
    out.require(match, "cluster counts equal the oracle");
    out.require(g.rate <= 0.9 * ell && last <= 0.9 * ell, "growth rate bounded away from ell");
    out.note("growth " + fmt("%.4f", g.rate) + ", max_cluster^(1/14) " + fmt("%.4f", last));
  }
  return out;
}

// 10. byte-identical reports across runs and worker counts.
Outcome determinism() {
  Outcome out;
  const std::vector<std::pair<std::string, std::string>> small{
      {"transversality.t", "[2, 3, 4]"}, {"transversality.nx", "8"}, {"transversality.ns", "2"},
      {"spectrum.nx", "16"},             {"spectrum.ns", "4"},      {"correlations.nx", "32"},
      {"correlations.ns", "8"},          {"norms.n", "32"},         {"norms.functions", "3"},
      {"genericity.samples", "200"},     {"genericity.n_hi", "10"}, {"mixing.grid", "1024"}};
  const std::string text = "ell = 2\nmean = 1\nharmonics = [[1, 0, 0.3], [2, 0.1, 0]]\n";
  int checked = 0;
  for (const auto& exp : experiment::experiment_names()) {
    auto overrides = small;
    overrides.emplace_back("experiment", exp);
    const auto cfg = experiment::parse_config(text, overrides);
    const auto ref = experiment::emit(experiment::run(cfg, {1}), "json");
    for (unsigned w : {1u, 2u, 4u}) {
      out.require(experiment::emit(experiment::run(cfg, {w}), "json") == ref, exp + " workers=" + std::to_string(w));
      ++checked;
    }
  }
  out.note(std::to_string(checked) + " reruns byte-identical");
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"branch-sum identity", branch_sum_identity},
      {"constant ceiling", constant_ceiling},
      {"coboundary round-trip", coboundary_round_trip},
      {"weakly mixing example", weakly_mixing_example},
      {"dichotomy consistency", dichotomy},
      {"cross-bound", cross_bound},
      {"Ulam sanity", ulam_sanity},
      {"anisotropic norms", anisotropic_norms},
      {"genericity", genericity_checks},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
