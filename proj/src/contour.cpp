#include "fctl/contour.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "fctl/errors.hpp"

namespace fctl {

struct ContourSolution::Cache {
  std::mutex mutex;
  std::map<int, std::shared_ptr<const std::vector<Node>>> levels;
};

ContourSolution::ContourSolution(const FctlInstance& instance, ContourOptions options)
    : g_(instance.g()),
      departure_(as_series(instance.arrivals())),
      cycle_(instance.cycle_series()),
      options_(options),
      t0_(compute_t0(instance.arrivals())),
      r0_(compute_r0(instance)),
      cache_(std::make_shared<Cache>()) {
  spec_ = choose_contour(t0_, r0_, instance.arrivals().radius(), options_.eta);
  spec_.nodes = options_.initial_nodes;
  spec_.tolerance = options_.tolerance;
  spec_.max_nodes = options_.max_nodes;
  validate_contour();
}

ContourSolution::ContourSolution(int g, SeriesFunction departure_pgf, SeriesFunction cycle_pgf,
                                 ContourOptions options)
    : g_(g),
      departure_(std::move(departure_pgf)),
      cycle_(std::move(cycle_pgf)),
      options_(options),
      t0_(compute_t0(departure_)),
      r0_(compute_r0(g, cycle_)),
      cache_(std::make_shared<Cache>()) {
  if (g < 1) throw std::invalid_argument("ContourSolution: g must be >= 1");
  spec_ = choose_contour(t0_, r0_, std::min(departure_.radius(), cycle_.radius()), options_.eta);
  spec_.nodes = options_.initial_nodes;
  spec_.tolerance = options_.tolerance;
  spec_.max_nodes = options_.max_nodes;
  validate_contour();
}

void ContourSolution::validate_contour() const {
  const double rad = spec_.radius;
  const double b_ratio = std::abs(departure_(rad)) / rad;
  const double a_ratio = std::abs(cycle_(rad)) / std::pow(rad, g_);
  if (!(b_ratio < 1.0) || !(a_ratio < 1.0)) {
    std::ostringstream msg;
    msg << "contour |z| = " << rad << " invalid: B(r)/r = " << b_ratio
        << ", A(r)/r^g = " << a_ratio << " (both must be < 1)";
    throw ContourValidityError(msg.str());
  }
}

ContourSolution::Node ContourSolution::make_node(cplx z) const {
  Node n;
  n.z = z;
  const Jet b = departure_.taylor(z, 1);
  const Jet a = cycle_.taylor(z, 1);
  n.b = b[0];
  n.db = b[1];
  const cplx zg = std::pow(z, g_);
  const cplx d = zg - a[0];
  const cplx dd = double(g_) * zg / z - a[1];
  n.d_log_d = dd / d;
  n.log_ratio = std::log(1.0 - a[0] / zg);
  n.pk1_weight = (n.db * z - n.b) / (z - n.b) * n.log_ratio;
  return n;
}

std::shared_ptr<const std::vector<ContourSolution::Node>> ContourSolution::nodes(int count) const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  auto found = cache_->levels.find(count);
  if (found != cache_->levels.end()) return found->second;

  auto table = std::make_shared<std::vector<Node>>(static_cast<std::size_t>(count));
  auto coarser = cache_->levels.find(count / 2);
  for (int j = 0; j < count; ++j) {
    if (coarser != cache_->levels.end() && count % 2 == 0 && j % 2 == 0) {
      (*table)[j] = (*coarser->second)[j / 2];
    } else {
      (*table)[j] = make_node(std::polar(spec_.radius, 2.0 * std::numbers::pi * j / count));
    }
  }
  cache_->levels.emplace(count, table);
  return table;
}

QuadratureResult ContourSolution::integrate(std::size_t dim, const NodeIntegrand& f) const {
  int n = spec_.nodes;
  std::vector<cplx> terms(static_cast<std::size_t>(n) * dim);
  {
    auto table = nodes(n);
    for (int j = 0; j < n; ++j) {
      std::span<cplx> out(&terms[j * dim], dim);
      f((*table)[j], out);
      for (auto& v : out) v *= (*table)[j].z;
    }
  }
  auto estimate = [&](int total) {
    std::vector<cplx> result(dim);
    std::vector<cplx> column(static_cast<std::size_t>(total));
    for (std::size_t d = 0; d < dim; ++d) {
      for (int j = 0; j < total; ++j) column[j] = terms[j * dim + d];
      result[d] = pairwise_sum(column) / static_cast<double>(total);
    }
    return result;
  };
  std::vector<cplx> previous = estimate(n);
  std::vector<cplx> before_previous = previous;
  while (2 * n <= spec_.max_nodes) {
    const int next = 2 * n;
    auto table = nodes(next);
    std::vector<cplx> refined(static_cast<std::size_t>(next) * dim);
    for (int j = 0; j < n; ++j) {
      std::copy_n(&terms[j * dim], dim, &refined[2 * j * dim]);
      const Node& node = (*table)[2 * j + 1];
      std::span<cplx> out(&refined[(2 * j + 1) * dim], dim);
      f(node, out);
      for (auto& v : out) v *= node.z;
    }
    terms.swap(refined);
    n = next;
    std::vector<cplx> current = estimate(n);
    double change = 0.0;
    for (std::size_t d = 0; d < dim; ++d) change = std::max(change, std::abs(current[d] - previous[d]));
    if (change < spec_.tolerance) return {std::move(current), n, change};
    if (!std::isfinite(change)) break;
    before_previous = std::move(previous);
    previous = std::move(current);
  }
  std::ostringstream msg;
  msg << "contour quadrature on |z| = " << spec_.radius << " did not converge within "
      << spec_.max_nodes << " nodes";
  throw ConvergenceError(msg.str(), before_previous.empty() ? cplx(0.0) : before_previous[0],
                         previous.empty() ? cplx(0.0) : previous[0]);
}

cplx ContourSolution::integrate(const std::function<cplx(const Node&)>& f) const {
  return integrate(1, [&f](const Node& n, std::span<cplx> out) { out[0] = f(n); }).values[0];
}

double ContourSolution::real_checked(cplx value, const char* what) const {
  if (std::abs(value.imag()) > options_.imaginary_tolerance * std::max(1.0, std::abs(value.real()))) {
    std::ostringstream msg;
    msg << what << ": imaginary residue " << value.imag() << " exceeds tolerance";
    throw SolverError(msg.str());
  }
  return value.real();
}

void ContourSolution::check_log_continuity(cplx w) const {
  const cplx bw = departure_(w);
  auto table = nodes(4 * spec_.nodes);
  double previous = 0.0;
  for (std::size_t j = 0; j <= table->size(); ++j) {
    const Node& n = (*table)[j % table->size()];
    const cplx q = (w * n.b - n.z * bw) / (n.b - n.z);
    if (q == cplx(0.0)) throw ContourValidityError("logarithmic kernel vanishes on the contour");
    const double arg = std::arg(q);
    if (j > 0 && std::abs(arg - previous) > std::numbers::pi) {
      std::ostringstream msg;
      msg << "logarithmic kernel crosses the branch cut for w = " << w
          << "; use the full-disk form";
      throw ContourValidityError(msg.str());
    }
    previous = arg;
  }
}

cplx ContourSolution::log_pgf(cplx w, PgfForm form) const {
  if (!(std::abs(w) < spec_.radius)) {
    std::ostringstream msg;
    msg << "X(w) requested at |w| = " << std::abs(w) << " outside the contour radius "
        << spec_.radius;
    throw std::domain_error(msg.str());
  }
  const cplx bw = departure_(w);
  if (form == PgfForm::pk1) {
    const cplx factor = w - bw;
    if (factor == cplx(0.0)) return 0.0;
    return integrate([&](const Node& n) { return n.pk1_weight * factor / (n.z * bw - w * n.b); });
  }
  check_log_continuity(w);
  return integrate([&](const Node& n) {
    return std::log((w * n.b - n.z * bw) / (n.b - n.z)) * n.d_log_d;
  });
}

cplx ContourSolution::eval_pgf(cplx w, PgfForm form) const { return std::exp(log_pgf(w, form)); }

Jet ContourSolution::log_pgf_jet(double base, int order) const {
  if (order < 0 || order > kMaxJetOrder) {
    throw std::invalid_argument("jet order must lie in [0, kMaxJetOrder]");
  }
  if (base < 0.0 || base > 1.0) check_log_continuity(base);
  const Jet b_jet = departure_.taylor(base, order);
  const Jet identity = Jet::variable(base, order);
  const std::size_t dim = static_cast<std::size_t>(order) + 1;
  const QuadratureResult q = integrate(dim, [&](const Node& n, std::span<cplx> out) {
    Jet u = identity * n.b - b_jet * n.z;
    const cplx u0 = u[0];
    Jet l = log(u);
    l[0] = std::log(u0 / (n.b - n.z));
    for (std::size_t k = 0; k < dim; ++k) out[k] = l[static_cast<int>(k)] * n.d_log_d;
  });
  return Jet(q.values);
}

Jet ContourSolution::eval_pgf_jet(double base, int order) const {
  return exp(log_pgf_jet(base, order));
}

double ContourSolution::mean_overflow() const {
  const double mean_b = departure_.derivative(1.0, 1).real();
  const cplx value = integrate([&](const Node& n) {
    return (n.b - n.z * mean_b) / (n.b - n.z) * n.d_log_d;
  });
  return real_checked(value, "mean_overflow");
}

double ContourSolution::variance_overflow() const {
  const Jet b1 = departure_.taylor(1.0, 2);
  const double mean_b = b1[1].real();
  const double second = 2.0 * b1[2].real() + mean_b;  // E[B^2]
  const double var_b = second - mean_b * mean_b;
  const double k = 1.0 + second - 2.0 * mean_b;
  const cplx value = integrate([&](const Node& n) {
    const cplx diff = n.z - n.b;
    return (n.z * n.z * var_b - n.z * n.b * k) / (diff * diff) * n.d_log_d;
  });
  return real_checked(value, "variance_overflow");
}

double ContourSolution::variance_from_jet() const {
  const Jet x = eval_pgf_jet(1.0, 2);
  const double first = real_checked(x[1], "jet X'(1)");
  const double second = 2.0 * real_checked(x[2], "jet X''(1)");
  return second + first - first * first;
}

double ContourSolution::prob_empty() const {
  const cplx b0 = departure_(0.0);
  const cplx value = integrate([&](const Node& n) {
    return std::log(n.z * b0 / (n.z - n.b)) * n.d_log_d;
  });
  return real_checked(std::exp(value), "prob_empty");
}

double ContourSolution::inversion_radius() const {
  return 0.999 * std::min(1.0, 0.9 * spec_.radius);
}

QueueDistribution ContourSolution::pmf_overflow(std::optional<int> kmax) const {
  const double rho = inversion_radius();
  const int points = options_.fft_points;
  std::vector<cplx> coefficients =
      invert_pgf_fft([this](cplx w) { return eval_pgf(w); }, rho, points);
  const int limit = kmax ? std::min(*kmax, points - 1) : points - 1;
  const int jet_order = std::min({limit, options_.jet_pmf_limit, kMaxJetOrder});
  const Jet at_zero = eval_pgf_jet(0.0, jet_order);
  for (int k = 0; k <= jet_order; ++k) coefficients[k] = at_zero[k];
  const int chosen = kmax ? limit : std::min(default_kmax(coefficients), points / 2);
  QueueDistribution dist = make_distribution(coefficients, chosen);
  std::ostringstream msg;
  msg << "FFT inversion on |w| = " << rho << " with " << points
      << " points; aliasing bound rho^M = " << std::pow(rho, points);
  dist.diagnostics.push_back(msg.str());
  return dist;
}

double ContourSolution::winding_number() const {
  return integrate([](const Node& n) { return n.d_log_d; }).real();
}

}  // namespace fctl
