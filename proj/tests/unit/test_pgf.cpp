#include <doctest.h>

#include <cmath>

#include "fctl/errors.hpp"
#include "fctl/pgf.hpp"

using namespace fctl;

namespace {

double poisson_pmf(double lambda, int k) {
  return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

}  // namespace

TEST_CASE("Poisson probabilities, moments and jets") {
  const CountPgf y = CountPgf::poisson(0.38);
  for (int k = 0; k <= 12; ++k) CHECK(std::abs(y.probability(k) - poisson_pmf(0.38, k)) < 1e-16);
  CHECK(y.mean() == doctest::Approx(0.38).epsilon(1e-15));
  CHECK(y.second_moment() == doctest::Approx(0.38 + 0.38 * 0.38).epsilon(1e-14));
  CHECK(std::isinf(y.radius()));
  CHECK(std::abs(y(0.5) - std::exp(0.38 * (0.5 - 1.0))) < 1e-15);
  // Y^(k)(0.5)/k! = λ^k e^{λ(0.5-1)}/k!
  const Jet j = y.taylor(0.5, 6);
  for (int k = 0; k <= 6; ++k) {
    const double expected = std::pow(0.38, k) * std::exp(-0.19) / std::tgamma(k + 1.0);
    CHECK(std::abs(j[k] - expected) < 1e-15);
  }
  const int n = y.support_bound(1e-12);
  double mass = 0.0;
  for (int k = 0; k <= n; ++k) mass += poisson_pmf(0.38, k);
  CHECK(1.0 - mass < 1e-12);
}

TEST_CASE("Bernoulli and geometric families") {
  const CountPgf b = CountPgf::bernoulli(0.3);
  CHECK(b.is_linear());
  CHECK(b.probability(0) == doctest::Approx(0.7));
  CHECK(b.probability(2) == 0.0);
  CHECK(std::abs(b.derivative(0.4, 1) - 0.3) < 1e-16);
  CHECK(std::abs(b.derivative(0.4, 2)) < 1e-16);

  const double mean = 0.3;
  const double q = mean / (1.0 + mean);
  const CountPgf g = CountPgf::geometric(mean);
  CHECK(g.radius() == doctest::Approx(1.0 / q));
  for (int k = 0; k < 8; ++k) CHECK(g.probability(k) == doctest::Approx((1 - q) * std::pow(q, k)));
  CHECK(g.mean() == doctest::Approx(mean));
  // E[Y^2] = Var + mean^2 = q/(1-q)^2 + (q/(1-q))^2
  CHECK(g.second_moment() == doctest::Approx(q / ((1 - q) * (1 - q)) + mean * mean));
  CHECK_THROWS_AS(g(cplx(1.0 / q + 0.1)), std::domain_error);
}

TEST_CASE("finite support weights") {
  const CountPgf f = CountPgf::finite_support({0.75, 0.2, 0.05});
  CHECK(f.mean() == doctest::Approx(0.3));
  CHECK(f.second_moment() == doctest::Approx(0.2 + 4 * 0.05));
  CHECK(std::abs(f(0.5) - (0.75 + 0.2 * 0.5 + 0.05 * 0.25)) < 1e-15);
  CHECK(std::abs(f.derivative(0.5, 2) - 0.1) < 1e-16);
  CHECK_FALSE(f.is_linear());
  // Renormalized within 1e-9, rejected beyond.
  CHECK_NOTHROW(CountPgf::finite_support({0.5, 0.5 + 1e-10}));
  CHECK_THROWS_AS(CountPgf::finite_support({0.5, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(CountPgf::finite_support({1.2, -0.2}), std::invalid_argument);
}

TEST_CASE("arrival model assumptions") {
  CHECK_THROWS_AS(ArrivalModel::bernoulli(1.0), std::invalid_argument);  // P(Y=0) = 0
  CHECK_THROWS_AS(ArrivalModel::poisson(1.2), std::invalid_argument);    // E[Y] >= 1
  CHECK_NOTHROW(ArrivalModel::poisson(0.0));
}

TEST_CASE("coefficients of Y^c") {
  // Poisson(λ)^c is Poisson(cλ).
  const auto a = taylor_coefficients(CountPgf::poisson(0.3), 50, 60);
  for (int k = 0; k <= 60; ++k) CHECK(std::abs(a[k] - poisson_pmf(15.0, k)) < 1e-14);
  // Bernoulli(p)^c is Binomial(c, p).
  const auto b = taylor_coefficients(CountPgf::bernoulli(0.4), 6, 8);
  for (int k = 0; k <= 6; ++k) {
    const double binom = std::tgamma(7.0) / (std::tgamma(k + 1.0) * std::tgamma(7.0 - k));
    CHECK(b[k] == doctest::Approx(binom * std::pow(0.4, k) * std::pow(0.6, 6 - k)));
  }
  CHECK(b[7] == 0.0);
}

TEST_CASE("traffic-light instance") {
  const FctlInstance in(20, 30, ArrivalModel::poisson(0.3));
  CHECK(in.c() == 50);
  CHECK(in.cycle_mean() == doctest::Approx(15.0));
  CHECK(in.load() == doctest::Approx(0.75));
  CHECK(std::abs(in.cycle_pgf(0.7) - std::exp(15.0 * (0.7 - 1.0))) < 1e-15);
  CHECK(std::abs(in.cycle_pgf_derivative(1.0) - 15.0) < 1e-12);
  const SeriesFunction s = in.cycle_series();
  CHECK(std::abs(s(cplx(0.2, 0.3)) - in.cycle_pgf(cplx(0.2, 0.3))) < 1e-15);
  CHECK(std::abs(s.derivative(1.0, 2) - 225.0) < 1e-10);

  CHECK_THROWS_AS(FctlInstance(20, 30, ArrivalModel::poisson(0.5)), StabilityError);
  CHECK_THROWS_AS(FctlInstance(20, 30, ArrivalModel::poisson(0.4)), StabilityError);  // c·E[Y] = g
  CHECK_THROWS_AS(FctlInstance(0, 3, ArrivalModel::poisson(0.1)), std::invalid_argument);
}
