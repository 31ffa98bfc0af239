#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "oracle_values.hpp"
#include "suspflow/error.hpp"
#include "suspflow/genericity.hpp"

using namespace suspflow;
using namespace suspflow::genericity;
using namespace fixtures;
using dynamics::Word;
using doctest::Approx;

namespace {

Word tail_word(int ell, std::size_t len, SplitMix64& rng) {
  std::vector<std::uint8_t> letters(len);
  for (auto& l : letters) l = static_cast<std::uint8_t>(1 + rng.next() % ell);
  return Word(ell, letters);
}

}  // namespace

TEST_CASE("splitmix streams are counter based") {
  SplitMix64 a(7, 3), b(7, 3), c(7, 4);
  const auto x = a.next();
  CHECK(x == b.next());
  CHECK(x != c.next());
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("constant chain") {
  const GenericityParams p;
  CHECK(p.violations(2).empty());
  CHECK(p.delta(2) == Approx((std::log(1.9) - std::log(1.8)) / (std::log(2.0) - std::log(1.8))));
  GenericityParams bad;
  bad.alpha = 2.5;
  CHECK(!bad.violations(2).empty());
}

TEST_CASE("bumps") {
  const Bump b{0.3, 0.1, 4.0};
  CHECK(b.derivative(0.3) == 4.0);
  CHECK(b.derivative(0.3 + 0.1 / 3.0 - 1e-9) == Approx(4.0));
  CHECK(b.derivative(0.45) == 0.0);
  CHECK(b.value(0.45) == Approx(0.0).epsilon(1e-9).scale(1));
  CHECK(std::abs(b.value(0.41)) < 1e-9);
  CHECK(b.value(0.3) == Approx(0.0).scale(1));
  CHECK(b.value(0.31) > 0.0);
  CHECK(b.value(0.29) < 0.0);
  CHECK(b.max_abs_derivative() < 2.0 * 4.0);
  // wraps around the circle
  const Bump w{0.02, 0.05, 1.0};
  CHECK(w.derivative(0.99) == Approx(w.derivative(-0.01)));
  CHECK(w.derivative(0.99) != 0.0);
}

TEST_CASE("jacobian") {
  Eigen::MatrixXd a(2, 3), b(2, 3), c(2, 3);
  a << 1, 0, 0, 0, 1, 0;
  b << 2, 0, 0, 0, 3, 0;
  c << 1, 2, 3, 2, 4, 6;
  CHECK(jacobian(a) == Approx(1.0));
  CHECK(jacobian(b) == Approx(6.0));
  CHECK(jacobian(c) == 0.0);
}

TEST_CASE("bump family for nu = 1") {
  const int mu = default_mu(2, 1, 3);
  const double eps0 = max_admissible_eps0(2, 0.3, 1, mu);
  REQUIRE(eps0 > 0.0);
  const auto fam = bump_family(2, 0.3, 1, eps0, mu, 1.0);
  REQUIRE(fam.bumps.size() == 2);
  CHECK(fam.bumps[0].center == Approx(0.15));
  CHECK(fam.bumps[1].center == Approx(0.65));
  for (const auto& b : fam.bumps) {
    CHECK(b.derivative(b.center) == Approx(2.0));
    CHECK(b.derivative(b.center + 0.9 * b.radius / 3.0) == Approx(2.0));
  }
  CHECK_THROWS_AS(bump_family(2, 0.3, 1, 2.0 * eps0 + 0.1, mu, 1.0), Error);
}

TEST_CASE("predecessor counts") {
  for (int nu : {1, 2, 3, 4, 6}) {
    const int mu = default_mu(2, nu, 3);
    const auto fam = bump_family(2, 0.3, nu, max_admissible_eps0(2, 0.3, nu, mu), mu);
    CHECK(fam.words.size() == (1u << nu));
    for (int c : fam.predecessors) {
      CHECK(c >= 1);
      CHECK(c <= nu + 1);
    }
  }
}

TEST_CASE("maximal elements are pairwise unordered") {
  const int nu = 4;
  const int mu = default_mu(2, nu, 3);
  const auto fam = bump_family(2, 0.3, nu, max_admissible_eps0(2, 0.3, nu, mu), mu);
  std::vector<std::size_t> all(fam.words.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto top = maximal_elements(fam, all);
  REQUIRE(!top.empty());
  const std::set<std::pair<std::size_t, std::size_t>> order(fam.order.begin(), fam.order.end());
  for (auto a : top)
    for (auto b : all) CHECK(order.count({a, b}) == 0);
}

TEST_CASE("g_matrix trivial cases") {
  const auto bumps = uniform_bumps(6, 3.0);
  const std::vector<Word> same(4, Word(2, {1, 2, 2, 1, 1}));
  CHECK(g_matrix(0.37, same, bumps).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("g_matrix does not depend on the base ceiling") {
  const auto bumps = uniform_bumps(8, 8.0);
  const PerturbationFamily a(one(), bumps, 0.05), b(generic(), bumps, 0.05);
  SplitMix64 rng(1, 1);
  std::vector<Word> sigma;
  for (int i = 0; i < 4; ++i) sigma.push_back(tail_word(2, 9, rng));
  CHECK(g_matrix(0.21, sigma, a) == g_matrix(0.21, sigma, b));
  CHECK(g_matrix(0.21, sigma, a) == g_matrix(0.21, sigma, bumps));
}

TEST_CASE("bump family split: identity block plus small entries, Jac >= 1 after rescaling") {
  const int ell = 2, nu = 6, p = 3;
  const double y = 0.3;
  const int mu = default_mu(ell, nu, p);
  const double eps0 = max_admissible_eps0(ell, y, nu, mu);
  const auto unit = bump_family(ell, y, nu, eps0, mu, 1.0);
  const auto fam = bump_family(ell, y, nu, eps0, mu);
  const double bound = 2.0 * std::pow(ell, nu - mu) / (1.0 - 1.0 / ell);
  std::vector<std::size_t> A((nu + 1) * (p + 1));
  for (std::size_t i = 0; i < A.size(); ++i) A[i] = i;
  auto top = maximal_elements(unit, A);
  REQUIRE(top.size() >= static_cast<std::size_t>(p + 1));
  top.resize(p + 1);
  SplitMix64 rng(0, 0xb0b);
  for (int k = 0; k < 20; ++k) {
    const double x = y + (eps0 / 3.0) * (2.0 * (k + 0.5) / 20 - 1.0);
    std::vector<Word> sigma;
    for (auto idx : top) sigma.push_back(unit.words[idx].concat(tail_word(ell, 4, rng)));
    const Eigen::MatrixXd L = g_matrix(x, sigma, unit.bumps);
    for (int i = 0; i < p; ++i)
      for (std::size_t j = 0; j < unit.bumps.size(); ++j) {
        double expected = 0.0;
        if (j == top[i + 1]) expected = 1.0;
        if (j == top[0]) expected = -1.0;
        CHECK(std::abs(L(i, static_cast<Eigen::Index>(j)) - expected) <= 2.0 * bound);
      }
    CHECK(jacobian(g_matrix(x, sigma, fam.bumps)) >= 1.0);
  }
}

TEST_CASE("slope clusters") {
  const auto c1 = ceiling::classify(one(), 0.9);
  for (int n : {4, 7, 10}) CHECK(slope_clusters(one(), c1, n, Word::repeat(2, 1, n)).max_cluster == (1u << n));
  const auto cc = ceiling::classify(coboundary(), 0.9);
  REQUIRE(2.0 * 0.1 * pi <= 8.0 * cc.theta_K);
  for (int n : {6, 9}) CHECK(slope_clusters(coboundary(), cc, n, Word::repeat(2, 1, n)).max_cluster == (1u << n));

  const auto c3 = ceiling::classify(generic(), 0.9);
  const auto g3 = cluster_growth(generic(), c3, 6, 14);
  REQUIRE(g3.counts.size() == oracle::clusters_f3.size());
  for (std::size_t i = 0; i < g3.counts.size(); ++i) {
    CHECK(g3.counts[i].first == static_cast<int>(6 + i));
    CHECK(static_cast<long long>(g3.counts[i].second) == oracle::clusters_f3[i]);
  }
  const auto c1s = ceiling::classify(sine(), 0.9);
  const auto g1 = cluster_growth(sine(), c1s, 6, 14);
  for (std::size_t i = 0; i < g1.counts.size(); ++i)
    CHECK(static_cast<long long>(g1.counts[i].second) == oracle::clusters_f1[i]);
  const auto report = slope_clusters(sine(), c1s, 8, Word::repeat(2, 1, 8));
  CHECK(report.cluster_words.size() == report.max_cluster);
  CHECK(std::is_sorted(report.cluster_words.begin(), report.cluster_words.end()));
}

TEST_CASE("perturbation family positivity") {
  CHECK_THROWS_AS(PerturbationFamily(one(), uniform_bumps(4, 200.0), 0.5), Error);
}

TEST_CASE("probe without directions reduces to the base ceiling") {
  const auto c1 = ceiling::classify(one(), 0.9);
  const PerturbationFamily fam(one(), {}, 0.05);
  const auto r = bad_set_probe(fam, c1, 6, 200, GenericityParams{}, 3);
  CHECK(r.fraction == 1.0);
  CHECK(r.jac_rejected == 0);
}

TEST_CASE("probe matches the fixed-seed oracle") {
  const auto c1 = ceiling::classify(one(), 0.9);
  const PerturbationFamily fam(one(), uniform_bumps(8, 8.0), 0.05);
  GenericityParams params;
  params.p = 3;
  double prev = 2.0;
  for (int i = 0; i < 3; ++i) {
    const int n = 4 + 2 * i;
    const auto r = bad_set_probe(fam, c1, n, 400, params, 7);
    CHECK(static_cast<long long>(r.hits) == oracle::probe_one[2 * i]);
    CHECK(static_cast<long long>(r.jac_rejected) == oracle::probe_one[2 * i + 1]);
    CHECK(r.accepted == r.samples - r.jac_rejected);
    CHECK(r.fraction < prev);
    prev = r.fraction;
    if (n == 6) {
      CHECK(r.ci_low == Approx(oracle::probe_one_n6_ci[0]).epsilon(1e-12));
      CHECK(r.ci_high == Approx(oracle::probe_one_n6_ci[1]).epsilon(1e-12));
    }
  }
  const auto a = bad_set_probe(fam, c1, 6, 100, params, 7, {1});
  const auto b = bad_set_probe(fam, c1, 6, 100, params, 7, {4});
  CHECK(a.hits == b.hits);
}

TEST_CASE("wilson interval") {
  const auto [lo, hi] = wilson_interval(0, 10);
  CHECK(lo == 0.0);
  CHECK(hi > 0.0);
  const auto [l2, h2] = wilson_interval(50, 100);
  CHECK(l2 + h2 == Approx(1.0));
}
