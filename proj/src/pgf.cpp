#include "fctl/pgf.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fctl/errors.hpp"

namespace fctl {

namespace {

constexpr double kNormalizationSlack = 1e-9;

// Truncated product of two coefficient sequences, keeping orders 0..n.
std::vector<double> convolve_truncated(const std::vector<double>& a,
                                       const std::vector<double>& b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t i = 0; i < a.size() && i <= static_cast<std::size_t>(n); ++i) {
    if (a[i] == 0.0) continue;
    const std::size_t jmax = std::min(b.size(), static_cast<std::size_t>(n) + 1 - i);
    for (std::size_t j = 0; j < jmax; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

}  // namespace

CountPgf::CountPgf(Kind kind, double param, std::vector<double> weights)
    : kind_(kind), param_(param), weights_(std::move(weights)) {}

CountPgf CountPgf::poisson(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("poisson: lambda must be finite and >= 0");
  }
  return CountPgf(Kind::poisson, lambda, {});
}

CountPgf CountPgf::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli: p must lie in [0,1]");
  return CountPgf(Kind::bernoulli, p, {});
}

CountPgf CountPgf::geometric(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) {
    throw std::invalid_argument("geometric: mean must be finite and > 0");
  }
  return CountPgf(Kind::geometric, mean, {});
}

CountPgf CountPgf::finite_support(std::vector<double> weights) {
  if (weights.empty()) throw std::invalid_argument("finite_support: no weights");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("finite_support: weights must be finite and >= 0");
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > kNormalizationSlack) {
    std::ostringstream msg;
    msg << "finite_support: weights sum to " << total << ", not 1";
    throw std::invalid_argument(msg.str());
  }
  for (double& w : weights) w /= total;
  while (weights.size() > 1 && weights.back() == 0.0) weights.pop_back();
  return CountPgf(Kind::finite_support, 0.0, std::move(weights));
}

std::string CountPgf::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::poisson: os << "Poisson(" << param_ << ")"; break;
    case Kind::bernoulli: os << "Bernoulli(" << param_ << ")"; break;
    case Kind::geometric: os << "Geometric(mean=" << param_ << ")"; break;
    case Kind::finite_support: {
      os << "FiniteSupport([";
      for (std::size_t i = 0; i < weights_.size(); ++i) os << (i ? "," : "") << weights_[i];
      os << "])";
      break;
    }
  }
  return os.str();
}

double CountPgf::radius() const {
  if (kind_ != Kind::geometric) return kInfinity;
  // q = mean/(1+mean), R = 1/q.
  return (1.0 + param_) / param_;
}

bool CountPgf::is_linear() const {
  switch (kind_) {
    case Kind::bernoulli: return true;
    case Kind::poisson: return param_ == 0.0;
    case Kind::geometric: return false;
    case Kind::finite_support: return weights_.size() <= 2;
  }
  return false;
}

void CountPgf::check_domain(cplx z) const {
  if (kind_ == Kind::geometric && std::abs(z) >= radius()) {
    std::ostringstream msg;
    msg << describe() << " is not analytic at |z| = " << std::abs(z) << " >= R = " << radius();
    throw std::domain_error(msg.str());
  }
}

cplx CountPgf::operator()(cplx z) const { return derivative(z, 0); }

cplx CountPgf::derivative(cplx z, int order) const {
  if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
  check_domain(z);
  switch (kind_) {
    case Kind::poisson:
      return std::pow(param_, order) * std::exp(param_ * (z - 1.0));
    case Kind::bernoulli:
      if (order == 0) return 1.0 - param_ + param_ * z;
      return order == 1 ? cplx(param_) : cplx(0.0);
    case Kind::geometric:
    case Kind::finite_support:
      return taylor(z, order).derivative(order);
  }
  return 0.0;
}

Jet CountPgf::taylor(cplx base, int order) const {
  check_domain(base);
  Jet out(order);
  switch (kind_) {
    case Kind::poisson: {
      cplx term = std::exp(param_ * (base - 1.0));
      for (int j = 0; j <= order; ++j) {
        out[j] = term;
        term *= param_ / (j + 1.0);
      }
      break;
    }
    case Kind::bernoulli:
      out[0] = 1.0 - param_ + param_ * base;
      if (order >= 1) out[1] = param_;
      break;
    case Kind::geometric: {
      const double q = param_ / (1.0 + param_);
      const cplx inv = 1.0 / (1.0 - q * base);
      cplx term = (1.0 - q) * inv;
      for (int j = 0; j <= order; ++j) {
        out[j] = term;
        term *= q * inv;
      }
      break;
    }
    case Kind::finite_support: {
      // Repeated synthetic division shifts the polynomial to the new base.
      std::vector<cplx> p(weights_.begin(), weights_.end());
      const int m = static_cast<int>(p.size()) - 1;
      for (int j = 0; j <= std::min(order, m); ++j) {
        for (int k = m - 1; k >= j; --k) p[k] += base * p[k + 1];
        out[j] = p[j];
      }
      break;
    }
  }
  return out;
}

double CountPgf::mean() const {
  switch (kind_) {
    case Kind::poisson:
    case Kind::bernoulli:
    case Kind::geometric: return param_;
    case Kind::finite_support: {
      double m = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) m += k * weights_[k];
      return m;
    }
  }
  return 0.0;
}

double CountPgf::second_moment() const {
  switch (kind_) {
    case Kind::poisson: return param_ + param_ * param_;
    case Kind::bernoulli: return param_;
    case Kind::geometric: return param_ * (1.0 + 2.0 * param_);
    case Kind::finite_support: {
      double m = 0.0;
      for (std::size_t k = 0; k < weights_.size(); ++k) m += double(k) * double(k) * weights_[k];
      return m;
    }
  }
  return 0.0;
}

double CountPgf::probability(int k) const {
  if (k < 0) return 0.0;
  switch (kind_) {
    case Kind::poisson: {
      if (param_ == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(k * std::log(param_) - param_ - std::lgamma(k + 1.0));
    }
    case Kind::bernoulli: return k == 0 ? 1.0 - param_ : (k == 1 ? param_ : 0.0);
    case Kind::geometric: {
      const double q = param_ / (1.0 + param_);
      return (1.0 - q) * std::pow(q, k);
    }
    case Kind::finite_support:
      return static_cast<std::size_t>(k) < weights_.size() ? weights_[k] : 0.0;
  }
  return 0.0;
}

std::vector<double> CountPgf::pmf(int n) const {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  if (kind_ == Kind::poisson) {
    // Forward recurrence; exact start value, no cancellation for λ < k.
    double term = std::exp(-param_);
    for (int k = 0; k <= n; ++k) {
      out[k] = term;
      term *= param_ / (k + 1.0);
    }
    return out;
  }
  for (int k = 0; k <= n; ++k) out[k] = probability(k);
  return out;
}

int CountPgf::support_bound(double tol) const {
  constexpr int kCap = 100000;
  switch (kind_) {
    case Kind::bernoulli: return param_ > 0.0 ? 1 : 0;
    case Kind::finite_support: return static_cast<int>(weights_.size()) - 1;
    case Kind::geometric: {
      const double q = param_ / (1.0 + param_);
      const int n = static_cast<int>(std::ceil(std::log(tol) / std::log(q)));
      return std::min(std::max(n, 1), kCap);
    }
    case Kind::poisson: {
      if (param_ == 0.0) return 0;
      double term = std::exp(-param_);
      for (int n = 0; n < kCap; ++n) {
        const double next = term * param_ / (n + 1.0);
        // Tail beyond n is at most next / (1 - λ/(n+2)) once n+2 > λ.
        if (n + 2 > param_ && next / (1.0 - param_ / (n + 2.0)) < tol) return n;
        term = next;
      }
      return kCap;
    }
  }
  return kCap;
}

ArrivalModel::ArrivalModel(CountPgf pgf) : CountPgf(std::move(pgf)) {
  if (!(probability(0) > 0.0)) {
    throw std::invalid_argument("arrival model " + describe() + " must have P(Y=0) > 0");
  }
  if (!(mean() < 1.0)) {
    throw std::invalid_argument("arrival model " + describe() + " must have E[Y] < 1");
  }
}

SeriesFunction::SeriesFunction(Generator generator, double radius)
    : generator_(std::move(generator)), radius_(radius) {}

cplx SeriesFunction::derivative(cplx z, int order) const {
  return generator_(z, order).derivative(order);
}

SeriesFunction as_series(const CountPgf& pgf) {
  return SeriesFunction([pgf](cplx base, int order) { return pgf.taylor(base, order); },
                        pgf.radius());
}

std::vector<double> taylor_coefficients(const CountPgf& pgf, int c, int n) {
  if (n < 0) throw std::invalid_argument("taylor_coefficients: n must be >= 0");
  if (c < 0) throw std::invalid_argument("taylor_coefficients: c must be >= 0");
  std::vector<double> result(static_cast<std::size_t>(n) + 1, 0.0);
  result[0] = 1.0;
  std::vector<double> base = pgf.pmf(n);
  int e = c;
  while (e > 0) {
    if (e & 1) result = convolve_truncated(result, base, n);
    e >>= 1;
    if (e > 0) base = convolve_truncated(base, base, n);
  }
  return result;
}

FctlInstance::FctlInstance(int g, int r, ArrivalModel arrivals)
    : g_(g), r_(r), arrivals_(std::move(arrivals)) {
  if (g < 1) throw std::invalid_argument("green period g must be >= 1");
  if (r < 0) throw std::invalid_argument("red period r must be >= 0");
  if (!(c() * arrivals_.mean() < g)) {
    std::ostringstream msg;
    msg << "unstable instance: c*E[Y] = " << c() << "*" << arrivals_.mean() << " = "
        << c() * arrivals_.mean() << " must be < g = " << g;
    throw StabilityError(msg.str());
  }
}

double FctlInstance::load() const { return c() * arrivals_.mean() / g_; }

cplx FctlInstance::cycle_pgf(cplx z) const { return std::pow(arrivals_(z), c()); }

cplx FctlInstance::cycle_pgf_derivative(cplx z) const {
  if (c() == 0) return 0.0;
  return double(c()) * std::pow(arrivals_(z), c() - 1) * arrivals_.derivative(z, 1);
}

double FctlInstance::cycle_mean() const { return c() * arrivals_.mean(); }

SeriesFunction FctlInstance::cycle_series() const {
  const ArrivalModel y = arrivals_;
  const int c = this->c();
  return SeriesFunction([y, c](cplx base, int order) { return pow(y.taylor(base, order), c); },
                        y.radius());
}

std::string FctlInstance::describe() const {
  std::ostringstream os;
  os << "g=" << g_ << " r=" << r_ << " Y=" << arrivals_.describe();
  return os.str();
}

}  // namespace fctl
