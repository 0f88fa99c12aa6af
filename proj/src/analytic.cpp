#include "fctl/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fctl/errors.hpp"

namespace fctl {

namespace {

constexpr double kInvE = 0.36787944117144233;

// Series of W_0 about the branch point in p = sqrt(2(e x + 1)).
cplx branch_point_series(cplx p) {
  static constexpr double kCoef[] = {-1.0,
                                     1.0,
                                     -1.0 / 3.0,
                                     11.0 / 72.0,
                                     -43.0 / 540.0,
                                     769.0 / 17280.0,
                                     -221.0 / 8505.0};
  cplx acc = 0.0;
  for (int i = 6; i >= 0; --i) acc = acc * p + kCoef[i];
  return acc;
}

double real_part(const SeriesFunction& f, double t) { return f(t).real(); }

}  // namespace

cplx lambert_w(cplx x) {
  if (x == cplx(0.0)) return 0.0;
  const cplx p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
  if (std::abs(x + kInvE) < 1e-6) {
    cplx w = branch_point_series(p);
    if (x.imag() == 0.0 && x.real() >= -kInvE) w.imag(0.0);
    return w;
  }

  cplx w;
  if (std::abs(x + kInvE) < 0.3) {
    w = branch_point_series(p);
  } else if (std::abs(x) < 0.5) {
    w = x * (1.0 + x * (-1.0 + x * (1.5 - x * (8.0 / 3.0))));
  } else {
    w = std::log(x);
    if (std::abs(x) > 3.0) w -= std::log(w);
  }

  // Halley iteration.
  for (int it = 0; it < 100; ++it) {
    const cplx ew = std::exp(w);
    const cplx f = w * ew - x;
    const cplx wp1 = w + 1.0;
    const cplx step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) break;
  }
  if (x.imag() == 0.0 && x.real() >= -kInvE) w.imag(0.0);
  return w;
}

double compute_t0(const SeriesFunction& pgf) {
  const double limit = std::isfinite(pgf.radius()) ? pgf.radius() * (1.0 - 1e-9) : 1e6;
  auto h = [&pgf](double t) {
    const Jet j = pgf.taylor(t, 1);
    return (j[1] * t - j[0]).real();
  };
  // h(1) = B'(1) - 1 < 0; grow the bracket until h turns positive.
  double lo = 1.0;
  double hi = 2.0;
  while (h(std::min(hi, limit)) <= 0.0) {
    if (hi >= limit) return pgf.radius();
    lo = hi;
    hi *= 2.0;
  }
  hi = std::min(hi, limit);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double compute_t0(const CountPgf& pgf) {
  if (pgf.is_linear()) return kInfinity;
  return compute_t0(as_series(pgf));
}

double compute_r0(int g, const SeriesFunction& cycle_pgf) {
  const double cap = std::min(
      std::isfinite(cycle_pgf.radius()) ? cycle_pgf.radius() * (1.0 - 1e-9) : kInfinity,
      kContourRadiusCap);
  // Sign of t^g - A(t), compared in log space so large arguments stay finite.
  auto positive = [&](double t) {
    const double a = real_part(cycle_pgf, t);
    return g * std::log(t) > std::log(a);
  };
  double lo = 1.0;
  double step = 1e-6;
  double hi = 1.0 + step;
  while (positive(hi)) {
    if (hi >= cap) return kInfinity;
    lo = hi;
    step *= 2.0;
    hi = std::min(1.0 + step, cap);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double compute_r0(const FctlInstance& instance) {
  return compute_r0(instance.g(), instance.cycle_series());
}

ContourSpec choose_contour(double t0, double r0, double analytic_radius, double eta) {
  if (!(t0 > 1.0) || !(r0 > 1.0)) {
    throw std::invalid_argument("choose_contour: t0 and R0 must both exceed 1");
  }
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("choose_contour: eta must lie in (0,1)");
  double cap = kContourRadiusCap;
  if (std::isfinite(analytic_radius)) cap = std::min(cap, analytic_radius * (1.0 - 1e-9));
  const double budget = std::min({t0, r0, cap});
  ContourSpec spec;
  spec.epsilon_budget = budget - 1.0;
  spec.radius = 1.0 + eta * spec.epsilon_budget;
  return spec;
}

cplx pairwise_sum(std::span<const cplx> values) {
  if (values.size() <= 8) {
    cplx acc = 0.0;
    for (const cplx& v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

cplx trapezoid_circle(const std::function<cplx(cplx)>& f, double radius, int nodes) {
  std::vector<cplx> terms(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    const cplx z = std::polar(radius, 2.0 * std::numbers::pi * j / nodes);
    terms[j] = f(z) * z;
  }
  return pairwise_sum(terms) / static_cast<double>(nodes);
}

QuadratureResult contour_quadrature(std::size_t dim, const VectorIntegrand& f,
                                    const ContourSpec& spec) {
  if (spec.nodes < 1) throw std::invalid_argument("contour_quadrature: nodes must be positive");
  // Node-major storage of f(z_j)·z_j; level 2N interleaves the level-N nodes
  // with the new odd nodes.
  int n = spec.nodes;
  std::vector<cplx> terms(static_cast<std::size_t>(n) * dim);
  auto fill = [&](int j, int total, cplx* out) {
    const cplx z = std::polar(spec.radius, 2.0 * std::numbers::pi * j / total);
    f(z, std::span<cplx>(out, dim));
    for (std::size_t d = 0; d < dim; ++d) out[d] *= z;
  };
  for (int j = 0; j < n; ++j) fill(j, n, &terms[j * dim]);

  auto estimate = [&](int total) {
    std::vector<cplx> out(dim);
    std::vector<cplx> column(static_cast<std::size_t>(total));
    for (std::size_t d = 0; d < dim; ++d) {
      for (int j = 0; j < total; ++j) column[j] = terms[j * dim + d];
      out[d] = pairwise_sum(column) / static_cast<double>(total);
    }
    return out;
  };

  std::vector<cplx> previous = estimate(n);
  std::vector<cplx> before_previous = previous;
  while (true) {
    const int next = 2 * n;
    if (next > spec.max_nodes) {
      std::ostringstream msg;
      msg << "contour quadrature did not converge at radius " << spec.radius << " with " << n
          << " nodes";
      throw ConvergenceError(msg.str(), before_previous.empty() ? cplx(0.0) : before_previous[0],
                             previous.empty() ? cplx(0.0) : previous[0]);
    }
    std::vector<cplx> refined(static_cast<std::size_t>(next) * dim);
    for (int j = 0; j < n; ++j) {
      std::copy_n(&terms[j * dim], dim, &refined[2 * j * dim]);
      fill(2 * j + 1, next, &refined[(2 * j + 1) * dim]);
    }
    terms.swap(refined);
    n = next;
    std::vector<cplx> current = estimate(n);
    double change = 0.0;
    for (std::size_t d = 0; d < dim; ++d) change = std::max(change, std::abs(current[d] - previous[d]));
    if (!std::isfinite(change)) {
      throw ConvergenceError("contour quadrature produced a non-finite value",
                             previous.empty() ? cplx(0.0) : previous[0],
                             current.empty() ? cplx(0.0) : current[0]);
    }
    if (change < spec.tolerance) return {std::move(current), n, change};
    before_previous = std::move(previous);
    previous = std::move(current);
  }
}

cplx contour_quadrature(const std::function<cplx(cplx)>& f, const ContourSpec& spec) {
  return contour_quadrature(
             1, [&f](cplx z, std::span<cplx> out) { out[0] = f(z); }, spec)
      .values[0];
}

}  // namespace fctl
