#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "oracle_values.hpp"
#include "suspflow/error.hpp"
#include "suspflow/transversality.hpp"

using namespace suspflow;
using namespace suspflow::transversality;
using namespace fixtures;
using doctest::Approx;

TEST_CASE("m_sum_at on the constant ceiling is 1") {
  for (double x : {0.0, 0.3, 0.77}) CHECK(m_sum_at(one(), {x, 0.4}, 2.5, 0.0) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("m_sum_at on the coboundary collapses to 1") {
  const auto f = coboundary();
  const auto cls = ceiling::classify(f, 0.9);
  // slopes differ by at most ell^-n * 2 max|Psi'| = ell^-n * 0.2 pi
  REQUIRE(2.0 * 0.1 * pi <= 2.0 * cls.theta_f);
  CHECK(m_sum_at(f, {0.0, 0.0}, 6.0, cls.theta_f) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("m_sum_at on the sine ceiling matches exhaustive enumeration") {
  const auto cls = ceiling::classify(sine(), 0.9);
  CHECK(m_sum_at(sine(), {0.0, 0.0}, 10.0, cls.theta_f) == Approx(oracle::m_sum_f1_t10).epsilon(1e-12));
}

TEST_CASE("m_of_t") {
  const auto c1 = ceiling::classify(one(), 0.9);
  const auto e1 = m_of_t(one(), c1, 4.2, 16, 4, true);
  CHECK(e1.m_value == Approx(1.0));
  CHECK(e1.m_upper == Approx(1.0));

  const auto cls = ceiling::classify(sine(), 0.9);
  const auto e = m_of_t(sine(), cls, 12.0, 64, 8, true);
  CHECK(e.m_value == Approx(oracle::m_of_t_f1_t12_value).epsilon(1e-12));
  CHECK(e.m_upper == Approx(oracle::m_of_t_f1_t12_upper).epsilon(1e-12));
  CHECK(e.slack == Approx(e.m_upper - e.m_value));
  CHECK(e.m_upper >= e.m_value);
  CHECK(e.grid.nx == 64);
}

TEST_CASE("1x1 grid reduces to m_sum_at") {
  const auto cls = ceiling::classify(generic(), 0.9);
  const auto e = m_of_t(generic(), cls, 5.0, 1, 1, false);
  CHECK(e.m_value == m_sum_at(generic(), {0.0, 0.0}, 5.0, cls.theta_f));
  CHECK(e.m_argmax.on_section);
}

TEST_CASE("worker count does not change m_of_t") {
  const auto cls = ceiling::classify(generic(), 0.9);
  const auto a = m_of_t(generic(), cls, 6.0, 16, 4, true, {1});
  const auto b = m_of_t(generic(), cls, 6.0, 16, 4, true, {4});
  CHECK(a.m_value == b.m_value);
  CHECK(a.m_upper == b.m_upper);
  CHECK(a.m_argmax.z.x == b.m_argmax.z.x);
}

TEST_CASE("n_of_t") {
  const auto c1 = ceiling::classify(one(), 0.9);
  for (double t : {1.0, 3.5, 7.0}) CHECK(n_of_t(one(), c1, t, 8, 2, 16).first == Approx(1.0));
  const auto cls = ceiling::classify(sine(), 0.9);
  const auto [nv, nu] = n_of_t(sine(), cls, 8.0, 32, 4, 16);
  CHECK(nv == Approx(oracle::n_of_t_f1_t8).epsilon(1e-12));
  CHECK(nu >= nv);
}

TEST_CASE("more candidate slopes never decrease n") {
  const auto f = generic();
  const auto cls = ceiling::classify(f, 0.9);
  double prev = 0.0;
  for (int extra : {0, 8, 64, 512}) {
    const double v = n_sum_at(f, {0.4, 0.1}, 6.0, cls.theta_f, 0.0, extra);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("n lies between the heaviest branch and 1") {
  const auto f = generic();
  const auto cls = ceiling::classify(f, 0.9);
  for (double x : {0.0, 0.25, 0.6}) {
    const FlowPoint z{x, 0.0};
    double heaviest = 0.0;
    for (const auto& b : dynamics::inverse_branches(f, z, 5.0, cls.theta_f)) heaviest = std::max(heaviest, 1.0 / b.expansion);
    const double n = n_sum_at(f, z, 5.0, cls.theta_f);
    CHECK(n >= heaviest);
    CHECK(n <= 1.0 + 1e-12);
  }
}

TEST_CASE("lambda_min") {
  for (double c : {1.0, 2.0}) {
    const auto f = TrigPolynomial::constant(2, c);
    CHECK(lambda_min(f, LambdaMethod::Periodic, 6).value == Approx(std::pow(2.0, 1.0 / c)).epsilon(1e-14));
    CHECK(lambda_min(f, LambdaMethod::Grid, 8.0, 32, 4).value == Approx(std::pow(2.0, 1.0 / c)).epsilon(1e-14));
  }
  CHECK(lambda_min(one(), LambdaMethod::Periodic, 1).value == 2.0);
  const auto p = lambda_min(sine(), LambdaMethod::Periodic, 12);
  CHECK(p.value == Approx(oracle::lambda_periodic_f1).epsilon(1e-12));
  const auto g = lambda_min(sine(), LambdaMethod::Grid, 20.0, 256, 8);
  CHECK(g.value == Approx(oracle::lambda_grid_f1_t20).epsilon(1e-12));
  CHECK(g.value > p.value);
  const auto fine = lambda_min(sine(), LambdaMethod::Grid, 20.0, 1024, 8);
  CHECK(std::abs(fine.value - p.value) <= 0.05);
}

TEST_CASE("exponent_fit") {
  std::vector<std::pair<double, double>> flat, geo;
  for (double t = 1; t <= 8; ++t) {
    flat.emplace_back(t, 1.0);
    geo.emplace_back(t, std::pow(2.0, -t));
  }
  CHECK(exponent_fit(flat).rate == Approx(1.0));
  CHECK(exponent_fit(flat).log_residual == Approx(0.0));
  CHECK(exponent_fit(geo).rate == Approx(0.5).epsilon(1e-14));
  CHECK(exponent_fit(geo).log_residual < 1e-12);
  const std::vector<std::pair<double, double>> stored{{2.0, 1.0}, {4.0, 0.75}, {6.0, 0.34375}, {8.0, 0.1171875}};
  CHECK(exponent_fit(stored).rate == Approx(oracle::stored_m_rate).epsilon(1e-6));
  CHECK_THROWS_AS(exponent_fit({{1.0, 1.0}}), Error);
}

TEST_CASE("flow grid") {
  const auto g = flow_grid(sine(), 4, 2);
  REQUIRE(g.size() == 8);
  CHECK(g[3].x == 0.25);
  CHECK(g[3].s == Approx(0.5 * sine()(0.25)));
}
