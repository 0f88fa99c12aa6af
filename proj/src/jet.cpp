#include "fctl/jet.hpp"

#include <algorithm>
#include <stdexcept>

namespace fctl {

Jet::Jet(std::vector<cplx> coefficients) : c_(std::move(coefficients)) {}

Jet Jet::constant(cplx value, int order) {
  Jet j(order);
  j[0] = value;
  return j;
}

Jet Jet::variable(cplx base, int order) {
  Jet j(order);
  j[0] = base;
  if (order >= 1) j[1] = 1.0;
  return j;
}

cplx Jet::derivative(int j) const {
  double factorial = 1.0;
  for (int i = 2; i <= j; ++i) factorial *= i;
  return (*this)[j] * factorial;
}

cplx Jet::eval_offset(cplx h) const {
  cplx acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * h + *it;
  return acc;
}

Jet Jet::shifted() const {
  if (c_.size() < 2) throw std::invalid_argument("Jet::shifted: order 0");
  return Jet(std::vector<cplx>(c_.begin() + 1, c_.end()));
}

Jet Jet::truncated(int order) const {
  Jet out(std::min(order, this->order()));
  std::copy_n(c_.begin(), out.c_.size(), out.c_.begin());
  return out;
}

Jet& Jet::operator+=(const Jet& other) {
  if (other.order() < order()) c_.resize(other.c_.size());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += other.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& other) {
  if (other.order() < order()) c_.resize(other.c_.size());
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= other.c_[i];
  return *this;
}

Jet& Jet::operator*=(const Jet& other) {
  *this = *this * other;
  return *this;
}

Jet& Jet::operator/=(const Jet& other) {
  *this = *this / other;
  return *this;
}

Jet& Jet::operator+=(cplx s) {
  c_.at(0) += s;
  return *this;
}

Jet& Jet::operator-=(cplx s) {
  c_.at(0) -= s;
  return *this;
}

Jet& Jet::operator*=(cplx s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet& Jet::operator/=(cplx s) {
  for (auto& v : c_) v /= s;
  return *this;
}

Jet operator-(const Jet& a) { return a * cplx(-1.0); }
Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator+(Jet a, cplx s) { return a += s; }
Jet operator-(Jet a, cplx s) { return a -= s; }
Jet operator*(Jet a, cplx s) { return a *= s; }
Jet operator*(cplx s, Jet a) { return a *= s; }
Jet operator/(Jet a, cplx s) { return a /= s; }

Jet operator*(const Jet& a, const Jet& b) {
  const int k = std::min(a.order(), b.order());
  Jet out(k);
  for (int i = 0; i <= k; ++i) {
    cplx acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += a[j] * b[i - j];
    out[i] = acc;
  }
  return out;
}

Jet operator/(const Jet& a, const Jet& b) {
  const int k = std::min(a.order(), b.order());
  if (b[0] == cplx(0.0)) {
    throw std::domain_error("Jet division by a series with zero constant term");
  }
  Jet out(k);
  for (int i = 0; i <= k; ++i) {
    cplx acc = a[i];
    for (int j = 0; j < i; ++j) acc -= out[j] * b[i - j];
    out[i] = acc / b[0];
  }
  return out;
}

Jet reciprocal(const Jet& a) { return Jet::constant(1.0, a.order()) / a; }

Jet log(const Jet& a) {
  if (a[0] == cplx(0.0)) {
    throw std::domain_error("Jet log of a series with zero constant term");
  }
  const int k = a.order();
  Jet out(k);
  out[0] = std::log(a[0]);
  for (int i = 1; i <= k; ++i) {
    cplx acc = a[i];
    for (int j = 1; j < i; ++j) acc -= (static_cast<double>(j) / i) * out[j] * a[i - j];
    out[i] = acc / a[0];
  }
  return out;
}

Jet exp(const Jet& a) {
  const int k = a.order();
  Jet out(k);
  out[0] = std::exp(a[0]);
  for (int i = 1; i <= k; ++i) {
    cplx acc = 0.0;
    for (int j = 1; j <= i; ++j) acc += static_cast<double>(j) * a[j] * out[i - j];
    out[i] = acc / static_cast<double>(i);
  }
  return out;
}

Jet pow(const Jet& a, int n) {
  if (n < 0) return reciprocal(pow(a, -n));
  Jet result = Jet::constant(1.0, a.order());
  Jet base = a;
  while (n > 0) {
    if (n & 1) result *= base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

Jet compose(std::span<const cplx> outer, const Jet& inner) {
  Jet h = inner;
  h[0] = 0.0;
  Jet acc = Jet::constant(outer.empty() ? cplx(0.0) : outer.back(), inner.order());
  for (std::size_t i = outer.size(); i-- > 1;) {
    acc = acc * h;
    acc[0] += outer[i - 1];
  }
  return acc;
}

}  // namespace fctl
