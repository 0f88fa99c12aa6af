#include <doctest.h>

#include <cmath>

#include "fctl/jet.hpp"

using namespace fctl;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_CASE("exp of the identity jet has coefficients 1/k!") {
  const Jet e = exp(Jet::variable(0.0, 12));
  for (int k = 0; k <= 12; ++k) CHECK(std::abs(e[k] - 1.0 / factorial(k)) < 1e-15);
}

TEST_CASE("log(1+z) has coefficients (-1)^(k+1)/k") {
  const Jet l = log(Jet::variable(0.0, 10) + 1.0);
  CHECK(std::abs(l[0]) < 1e-16);
  for (int k = 1; k <= 10; ++k) CHECK(std::abs(l[k] - std::pow(-1.0, k + 1) / k) < 1e-15);
}

TEST_CASE("reciprocal of 1-z is the geometric series") {
  const Jet one_minus = Jet::constant(1.0, 15) - Jet::variable(0.0, 15);
  const Jet inv = reciprocal(one_minus);
  for (int k = 0; k <= 15; ++k) CHECK(std::abs(inv[k] - 1.0) < 1e-14);
  const Jet q = Jet::constant(1.0, 15) / one_minus;
  for (int k = 0; k <= 15; ++k) CHECK(std::abs(q[k] - inv[k]) < 1e-14);
}

TEST_CASE("integer powers give binomial coefficients") {
  const Jet p = pow(Jet::variable(0.0, 6) + 1.0, 5);
  const double binom[] = {1, 5, 10, 10, 5, 1, 0};
  for (int k = 0; k <= 6; ++k) CHECK(std::abs(p[k] - binom[k]) < 1e-13);
}

TEST_CASE("arithmetic at a non-zero base") {
  // f(z) = z^2 about base 2: 4 + 4h + h^2.
  const Jet z = Jet::variable(2.0, 4);
  const Jet sq = z * z;
  CHECK(std::abs(sq[0] - 4.0) < 1e-15);
  CHECK(std::abs(sq[1] - 4.0) < 1e-15);
  CHECK(std::abs(sq[2] - 1.0) < 1e-15);
  CHECK(std::abs(sq[3]) < 1e-15);
  CHECK(std::abs(sq.derivative(2) - 2.0) < 1e-14);
}

TEST_CASE("evaluation at an offset and derivatives") {
  const Jet e = exp(Jet::variable(1.0, 20));
  CHECK(std::abs(e.eval_offset(0.1) - std::exp(1.1)) < 1e-14);
  CHECK(std::abs(e.derivative(3) - std::exp(1.0)) < 1e-12);
}

TEST_CASE("shifted divides by (z - base)") {
  // (z - 1)(z + 2) about 1, shifted -> z + 2 about 1 = 3 + h.
  const Jet z = Jet::variable(1.0, 3);
  const Jet f = (z - 1.0) * (z + 2.0);
  const Jet s = f.shifted();
  CHECK(s.order() == 2);
  CHECK(std::abs(s[0] - 3.0) < 1e-15);
  CHECK(std::abs(s[1] - 1.0) < 1e-15);
  CHECK(std::abs(s[2]) < 1e-15);
}

TEST_CASE("composition with a power series") {
  std::vector<cplx> outer(9);
  for (int k = 0; k <= 8; ++k) outer[k] = 1.0 / factorial(k);  // exp
  const Jet inner = Jet::variable(0.0, 8) * 2.0;
  const Jet c = compose(outer, inner);
  for (int k = 0; k <= 8; ++k) CHECK(std::abs(c[k] - std::pow(2.0, k) / factorial(k)) < 1e-14);
}

TEST_CASE("complex coefficients") {
  const Jet z = Jet::variable(cplx(0.0, 1.0), 3);
  const Jet inv = reciprocal(z);  // 1/(i+h) = -i - (-1)h ... = sum (-1)^k h^k / i^(k+1)
  for (int k = 0; k <= 3; ++k) {
    const cplx expected = std::pow(-1.0, k) / std::pow(cplx(0.0, 1.0), k + 1);
    CHECK(std::abs(inv[k] - expected) < 1e-15);
  }
}
