#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fctl {

using cplx = std::complex<double>;

/// Highest Taylor order the contour backend will expand to. Beyond this the
/// number of significant terms in the derivative ladder makes the jets
/// unreliable and callers should switch to numerical PGF inversion.
inline constexpr int kMaxJetOrder = 64;

/// Truncated Taylor series c_0 + c_1 h + ... + c_k h^k of a function about
/// some base point, with h the offset from the base.
///
/// All arithmetic is truncated power-series algebra: coefficient j of any
/// result depends only on coefficients 0..j of the operands. Binary
/// operations between jets of different order yield the smaller order.
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order) : c_(static_cast<std::size_t>(order) + 1) {}
  explicit Jet(std::vector<cplx> coefficients);

  static Jet constant(cplx value, int order);
  /// The identity function about `base`: base + h.
  static Jet variable(cplx base, int order);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  bool empty() const { return c_.empty(); }

  cplx operator[](int j) const { return c_[static_cast<std::size_t>(j)]; }
  cplx& operator[](int j) { return c_[static_cast<std::size_t>(j)]; }
  std::span<const cplx> coefficients() const { return c_; }

  /// j-th derivative at the base point, j! c_j.
  cplx derivative(int j) const;
  /// Evaluates the truncated series at offset h from the base.
  cplx eval_offset(cplx h) const;

  /// (f - f(base)) / h: drops c_0 and lowers the order by one.
  Jet shifted() const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(const Jet& other);
  Jet& operator/=(const Jet& other);
  Jet& operator+=(cplx s);
  Jet& operator-=(cplx s);
  Jet& operator*=(cplx s);
  Jet& operator/=(cplx s);

 private:
  std::vector<cplx> c_;
};

Jet operator-(const Jet& a);
Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator+(Jet a, cplx s);
Jet operator-(Jet a, cplx s);
Jet operator*(Jet a, cplx s);
Jet operator*(cplx s, Jet a);
Jet operator/(Jet a, cplx s);

Jet reciprocal(const Jet& a);
/// Principal log of the constant term; higher terms from (log a)' = a'/a.
Jet log(const Jet& a);
Jet exp(const Jet& a);
/// Integer power by repeated squaring (no logarithm, so a zero constant
/// term is fine).
Jet pow(const Jet& a, int n);
/// outer ∘ inner, where `outer` holds Taylor coefficients about inner[0].
Jet compose(std::span<const cplx> outer, const Jet& inner);

}  // namespace fctl
