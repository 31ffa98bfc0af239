#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracle_values.hpp"
#include "suspflow/error.hpp"

using namespace suspflow;
using namespace fixtures;
using doctest::Approx;

TEST_CASE("eval closed forms") {
  CHECK(one().eval(0.37, 1) == 0.0);
  CHECK(sine().eval(0.0, 1) == Approx(0.4 * pi).epsilon(1e-14));
  CHECK(sine().eval(0.25, 2) == Approx(-0.8 * pi * pi).epsilon(1e-14));
  CHECK(sine()(0.25) == Approx(1.2));
  CHECK(generic().eval(0.1, 3) == Approx(-0.3 * std::pow(2 * pi, 3) * std::cos(0.2 * pi) +
                                         0.1 * std::pow(4 * pi, 3) * std::sin(0.4 * pi)));
}

TEST_CASE("constructor rejects bad input") {
  CHECK_THROWS_AS(TrigPolynomial(1, 1.0, {}), Error);
  CHECK_THROWS_AS(TrigPolynomial(2, 1.0, {{0, 1.0, 0.0}}), Error);
  CHECK_THROWS_AS(TrigPolynomial(2, 1.0, {{1, 0.1, 0.0}, {1, 0.0, 0.1}}), Error);
  const TrigPolynomial sorted(2, 1.0, {{3, 0.1, 0.0}, {1, 0.0, 0.1}});
  CHECK(sorted.harmonics().front().k == 1);
}

TEST_CASE("coboundary construction") {
  const TrigPolynomial psi(2, 0.0, {{1, 0.0, 0.05}});
  CHECK(TrigPolynomial::coboundary(psi, 1.0) == coboundary());
}

TEST_CASE("classify constant") {
  const auto c = ceiling::classify(one(), 0.9);
  CHECK(c.theta_f == 0.0);
  CHECK(c.f_min == 1.0);
  CHECK(c.f_max == 1.0);
  CHECK(c.theta_K == Approx(oracle::theta_K_one));
}

TEST_CASE("classify sine: theta_f = pi/2") {
  const auto c = ceiling::classify(sine(), 0.9);
  CHECK(c.theta_f == Approx(pi / 2).epsilon(1e-10));
  CHECK(c.max_abs_df == Approx(0.4 * pi).epsilon(1e-10));
  CHECK(c.theta_K == Approx(oracle::theta_K_f1));
}

TEST_CASE("classify generic against dense grid") {
  const auto c = ceiling::classify(generic(), 0.9);
  CHECK(c.theta_f == Approx(oracle::theta_f_f3).epsilon(1e-9));
  CHECK(c.theta_K == Approx(oracle::theta_K_f3));
}

TEST_CASE("class invariants") {
  for (const auto& f : {one(), sine(), generic(), coboundary(), generic_b()}) {
    const auto c = ceiling::classify(f, 0.9);
    CHECK(1.0 / c.K < c.f_min);
    CHECK(c.f_min <= c.f_max);
    CHECK(c.f_max < c.K);
    CHECK(c.cr_surrogate < c.K);
    CHECK(c.d2s_bound <= c.theta_K);
    CHECK(f(c.x_min) == Approx(c.f_min));
  }
}

TEST_CASE("classify rejects non-positive ceilings and bad gamma0") {
  const TrigPolynomial neg(2, 0.1, {{1, 0.0, 0.5}});
  CHECK_THROWS_AS(ceiling::classify(neg, 0.9), Error);
  CHECK_THROWS_AS(ceiling::classify(sine(), 0.4), Error);
  CHECK_THROWS_AS(ceiling::classify(sine(), 1.0), Error);
}

TEST_CASE("k_override only raises K") {
  const auto base = ceiling::classify(sine(), 0.9);
  CHECK(ceiling::classify(sine(), 0.9, 4096, 1.0).K == base.K);
  CHECK(ceiling::classify(sine(), 0.9, 4096, 4 * base.K).K >= 4 * base.K);
}
