#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracle_values.hpp"
#include "suspflow/dynamics.hpp"
#include "suspflow/error.hpp"

using namespace suspflow;
using namespace suspflow::dynamics;
using namespace fixtures;
using doctest::Approx;

TEST_CASE("word intervals") {
  CHECK(word_interval(Word(2, {1})) == std::pair{0.0, 0.5});
  CHECK(word_interval(Word(2, {2, 1})) == std::pair{0.25, 0.25});
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto [x, w] = word_interval(Word::repeat(3, 1, n));
    CHECK(x == 0.0);
    CHECK(w == Approx(std::pow(3.0, -static_cast<double>(n))));
  }
}

TEST_CASE("branch points") {
  CHECK(branch_point(Word(2, {2}), 0.3) == Approx(0.65));
  CHECK(branch_point(Word(2, {1}), 0.3) == Approx(0.15));
  CHECK(branch_point(Word(2, {2, 1}), 0.3) == Approx(oracle::branch_point_21));
}

TEST_CASE("branch point lies in its interval and maps back") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int ell = 2 + static_cast<int>(rng() % 3);
    const std::size_t n = 1 + rng() % 8;
    std::vector<std::uint8_t> letters(n);
    for (auto& l : letters) l = static_cast<std::uint8_t>(1 + rng() % ell);
    const Word a(ell, letters);
    const double x = u(rng);
    const double y = branch_point(a, x);
    const auto [lo, w] = word_interval(a);
    CHECK(y >= lo - 1e-15);
    CHECK(y < lo + w + 1e-15);
    CHECK(tau_n(ell, y, static_cast<int>(n)) == Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("birkhoff sums") {
  const Word a = Word::repeat(2, 2, 5);
  for (int order = 0; order <= 2; ++order) CHECK(birkhoff(one(), a, 0.4, order) == (order == 0 ? 5.0 : 0.0));
  CHECK(birkhoff(sine(), Word(2, {1}), 0.0, 0) == Approx(1.0));
  CHECK(birkhoff(sine(), Word(2, {1}), 0.0, 1) == Approx(0.2 * pi));
  CHECK(birkhoff(sine(), Word(2, {2, 1}), 0.0, 0) == Approx(oracle::birkhoff_21_o0).epsilon(1e-14));
  CHECK(birkhoff(sine(), Word(2, {2, 1}), 0.0, 1) == Approx(oracle::birkhoff_21_o1).epsilon(1e-14));
  CHECK(birkhoff(sine(), Word(2, {2, 1}), 0.0, 2) == Approx(oracle::birkhoff_21_o2).epsilon(1e-14));
}

TEST_CASE("time-t map") {
  const auto z = time_t_map(one(), {0.3, 0.0}, 2.5);
  CHECK(z.x == Approx(0.2));
  CHECK(z.s == Approx(0.5));
  const auto id = time_t_map(sine(), {0.1, 0.2}, 0.0);
  CHECK(id.x == 0.1);
  CHECK(id.s == 0.2);
  const auto w = time_t_map(sine(), {0.1, 0.2}, 5.0);
  CHECK(w.x == Approx(oracle::time_t_x).epsilon(1e-12));
  CHECK(w.s == Approx(oracle::time_t_s).epsilon(1e-12));
}

TEST_CASE("time-t map is a semi-flow") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto f = generic();
  for (int trial = 0; trial < 50; ++trial) {
    const double x = u(rng);
    const FlowPoint z{x, 0.9 * f(x) * u(rng)};
    const double a = 3.0 * u(rng), b = 3.0 * u(rng);
    const auto lhs = time_t_map(f, time_t_map(f, z, a), b);
    const auto rhs = time_t_map(f, z, a + b);
    CHECK(lhs.x == Approx(rhs.x).epsilon(1e-9));
    CHECK(lhs.s == Approx(rhs.s).epsilon(1e-9));
  }
}

TEST_CASE("flow count") {
  CHECK(flow_count(one(), 0.4, 2.5) == 2);
  CHECK(flow_count(sine(), 0.4, 0.0) == 0);
  CHECK(flow_count(sine(), 0.1, 7.0) == oracle::flow_count_f1);
}

TEST_CASE("inverse branches of the constant ceiling") {
  const auto br = inverse_branches(one(), {0.2, 0.0}, 2.5, 0.0);
  REQUIRE(br.size() == 8);
  double sum = 0.0;
  for (const auto& b : br) {
    CHECK(b.level == 3);
    CHECK(b.preimage.s == Approx(0.5));
    CHECK(b.expansion == 8.0);
    CHECK(b.slope == 0.0);
    sum += 1.0 / b.expansion;
  }
  CHECK(sum == 1.0);
}

TEST_CASE("level-0 branch when s >= t") {
  const auto br = inverse_branches(sine(), {0.3, 0.9}, 0.5, 1.0);
  bool found = false;
  for (const auto& b : br)
    if (b.level == 0) {
      found = true;
      CHECK(b.preimage.x == 0.3);
      CHECK(b.preimage.s == Approx(0.4));
      CHECK(b.expansion == 1.0);
    }
  CHECK(found);
}

TEST_CASE("inverse branches match the enumeration oracle and map forward onto z") {
  const FlowPoint z{0.3, 0.0};
  const auto br = inverse_branches(sine(), z, 8.0, 0.5);
  CHECK(static_cast<long long>(br.size()) == oracle::branches_f1_count);
  double slope_sum = 0.0;
  int max_level = 0;
  for (const auto& b : br) {
    slope_sum += b.slope;
    max_level = std::max(max_level, b.level);
    CHECK(b.cone.half_width == Approx(0.5 * std::pow(2.0, -b.level)));
    const auto w = time_t_map(sine(), b.preimage, 8.0);
    const double dx = std::min(std::abs(w.x - z.x), 1.0 - std::abs(w.x - z.x));
    CHECK(dx < 1e-9);
    CHECK(w.s == Approx(z.s).epsilon(1e-9));
  }
  CHECK(slope_sum == Approx(oracle::branches_f1_slope_sum).epsilon(1e-10));
  CHECK(max_level == oracle::branches_f1_max_level);
  CHECK(std::is_sorted(br.begin(), br.end(), [](const Branch& a, const Branch& b) { return a.word < b.word; }));
}

TEST_CASE("branch sum identity on random inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const TrigPolynomial fs[] = {one(), sine(), generic(), coboundary(), generic_b(), sine(3)};
  for (int trial = 0; trial < 30; ++trial) {
    const auto& f = fs[trial % 6];
    const double x = u(rng);
    const FlowPoint z{x, f(x) * u(rng)};
    const double t = 6.0 * u(rng);
    double sum = 0.0;
    for_each_branch(f, z, t, kDefaultBranchCap,
                    [&](const std::vector<std::uint8_t>&, int level, double, double, double) {
                      sum += std::pow(static_cast<double>(f.ell()), -level);
                    });
    CHECK(sum == Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("branch cap reports the admissible time") {
  try {
    inverse_branches(one(), {0.0, 0.0}, 20.0, 0.0, 1024);
    FAIL("expected resource limit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResourceLimit);
    REQUIRE(e.detail().contains("admissible_t"));
    const double t = e.detail()["admissible_t"].get<double>();
    CHECK(t < 20.0);
    CHECK(inverse_branches(one(), {0.0, 0.0}, t, 0.0, 1024).size() <= 1024);
  }
}

TEST_CASE("cones") {
  const Cone a{0.0, 1.0}, b{1.5, 0.6}, c{3.0, 0.5};
  CHECK(a.intersects(b));
  CHECK(!a.intersects(c));
  CHECK(a.contains_line(-1.0));
  CHECK(!a.contains_line(1.1));
}

TEST_CASE("branch CSV schema") {
  const auto br = inverse_branches(one(), {0.2, 0.0}, 2.5, 0.0);
  std::istringstream in(branches_csv(br));
  std::string header;
  std::getline(in, header);
  CHECK(header == "word,n,y,s_prime,E,slope");
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 8);
}
