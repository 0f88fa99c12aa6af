#include <doctest.h>

#include <cmath>

#include "fctl/distribution.hpp"
#include "fctl/jet.hpp"

using namespace fctl;

TEST_CASE("FFT inversion recovers Poisson probabilities") {
  const double lambda = 2.5;
  const auto pgf = [lambda](cplx w) { return std::exp(lambda * (w - 1.0)); };
  const auto c = invert_pgf_fft(pgf, 0.9, 256);
  for (int k = 0; k < 30; ++k) {
    const double exact = std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
    CHECK(std::abs(c[k] - exact) < 1e-14);
  }
}

TEST_CASE("distribution construction and summaries") {
  const std::vector<cplx> coeffs{0.5, 0.3, cplx(-1e-18, 1e-20), 0.2};
  const QueueDistribution d = make_distribution(coeffs, 3);
  CHECK(d.pmf[2] == 0.0);
  CHECK(d.total() == doctest::Approx(1.0));
  CHECK(d.mean() == doctest::Approx(0.3 + 0.6));
  CHECK(d.variance() == doctest::Approx(0.3 + 1.8 - 0.81));
  CHECK(d.survival(0) == doctest::Approx(0.5));
  CHECK(d.survival(3) == doctest::Approx(0.0));
  CHECK(d.at(10) == 0.0);
  CHECK(default_kmax(coeffs, 1e-9) == 3);
}

TEST_CASE("total variation") {
  QueueDistribution a, b;
  a.pmf = {0.5, 0.5};
  b.pmf = {0.25, 0.5, 0.25};
  CHECK(total_variation(a, b) == doctest::Approx(0.25));
  CHECK(total_variation(a, a) == 0.0);
  // Tails count as an extra atom.
  QueueDistribution t;
  t.pmf = {0.5};
  t.tail = 0.5;
  QueueDistribution u;
  u.pmf = {0.5, 0.5};
  CHECK(total_variation(t, u) == doctest::Approx(0.5));
}

TEST_CASE("convolution moves dropped mass to the tail") {
  QueueDistribution a;
  a.pmf = {0.5, 0.5};
  const QueueDistribution c = convolve(a, {0.5, 0.5}, 0.0);
  REQUIRE(c.pmf.size() >= 3);
  CHECK(c.pmf[0] == doctest::Approx(0.25));
  CHECK(c.pmf[1] == doctest::Approx(0.5));
  CHECK(c.pmf[2] == doctest::Approx(0.25));
  CHECK(c.total() == doctest::Approx(1.0));

  QueueDistribution geo;
  for (int k = 0; k < 200; ++k) geo.pmf.push_back(0.5 * std::pow(0.5, k));
  const QueueDistribution d = convolve(geo, {0.5, 0.5}, 1e-10);
  CHECK(d.total() == doctest::Approx(geo.total()).epsilon(1e-14));
  CHECK(d.tail <= 1e-10);
}
