#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fctl/jet.hpp"

namespace fctl {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A probability generating function of a count distribution on {0,1,2,...}.
///
/// Four closed-form families are supported. Geometric(mean) has
/// P(Y=k) = (1-q) q^k with q = mean/(1+mean) and is analytic only for
/// |z| < 1/q; all others are entire.
class CountPgf {
 public:
  enum class Kind { poisson, bernoulli, geometric, finite_support };

  static CountPgf poisson(double lambda);
  static CountPgf bernoulli(double p);
  static CountPgf geometric(double mean);
  /// Weights y_0..y_m. They are renormalized if they sum to 1 within 1e-9,
  /// and rejected otherwise.
  static CountPgf finite_support(std::vector<double> weights);

  Kind kind() const { return kind_; }
  std::string describe() const;
  /// λ, p or mean, depending on the family. Unused for finite support.
  double parameter() const { return param_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Radius of analyticity R.
  double radius() const;
  /// True when y_k = 0 for all k >= 2.
  bool is_linear() const;

  /// Y(z). Throws std::domain_error for |z| >= R.
  cplx operator()(cplx z) const;
  /// Y^{(order)}(z).
  cplx derivative(cplx z, int order) const;
  /// Taylor jet of Y about `base` through `order`.
  Jet taylor(cplx base, int order) const;

  double mean() const;
  /// E[Y^2].
  double second_moment() const;
  double variance() const { return second_moment() - mean() * mean(); }

  double probability(int k) const;
  /// y_0..y_n.
  std::vector<double> pmf(int n) const;
  /// Smallest n with P(Y > n) < tol (capped for heavy tails).
  int support_bound(double tol) const;

 private:
  CountPgf(Kind kind, double param, std::vector<double> weights);
  void check_domain(cplx z) const;

  Kind kind_;
  double param_;
  std::vector<double> weights_;
};

/// Per-slot arrival distribution Y of the traffic-light queue. Same as
/// CountPgf plus the model assumptions P(Y=0) > 0 and E[Y] < 1, enforced on
/// construction.
class ArrivalModel : public CountPgf {
 public:
  explicit ArrivalModel(CountPgf pgf);

  static ArrivalModel poisson(double lambda) { return ArrivalModel(CountPgf::poisson(lambda)); }
  static ArrivalModel bernoulli(double p) { return ArrivalModel(CountPgf::bernoulli(p)); }
  static ArrivalModel geometric(double mean) { return ArrivalModel(CountPgf::geometric(mean)); }
  static ArrivalModel finite_support(std::vector<double> weights) {
    return ArrivalModel(CountPgf::finite_support(std::move(weights)));
  }
};

/// An analytic function known through its Taylor jets; used where the
/// queue needs composite PGFs (A(z), B(z), ξ(z)) that are not a single
/// closed-form family.
class SeriesFunction {
 public:
  using Generator = std::function<Jet(cplx base, int order)>;

  SeriesFunction() = default;
  SeriesFunction(Generator generator, double radius);

  cplx operator()(cplx z) const { return generator_(z, 0)[0]; }
  cplx derivative(cplx z, int order = 1) const;
  Jet taylor(cplx base, int order) const { return generator_(base, order); }
  double radius() const { return radius_; }
  explicit operator bool() const { return static_cast<bool>(generator_); }

 private:
  Generator generator_;
  double radius_ = kInfinity;
};

SeriesFunction as_series(const CountPgf& pgf);

/// Coefficients a_0..a_n of Y(z)^c, computed by truncated repeated
/// convolution of y_0..y_n. Entries are non-negative with partial sums <= 1.
std::vector<double> taylor_coefficients(const CountPgf& pgf, int c, int n);

/// Fixed-cycle traffic-light instance: g green slots, r red slots, i.i.d.
/// per-slot arrivals Y, cycle length c = g + r and per-cycle arrivals
/// A(z) = Y(z)^c.
class FctlInstance {
 public:
  /// Throws StabilityError unless c·E[Y] < g.
  FctlInstance(int g, int r, ArrivalModel arrivals);

  int g() const { return g_; }
  int r() const { return r_; }
  int c() const { return g_ + r_; }
  const ArrivalModel& arrivals() const { return arrivals_; }

  /// c·E[Y]/g.
  double load() const;
  cplx cycle_pgf(cplx z) const;
  cplx cycle_pgf_derivative(cplx z) const;
  /// A'(1) = c·E[Y].
  double cycle_mean() const;
  SeriesFunction cycle_series() const;
  std::string describe() const;

 private:
  int g_;
  int r_;
  ArrivalModel arrivals_;
};

}  // namespace fctl
