#include "fctl/roots.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "fctl/analytic.hpp"
#include "fctl/errors.hpp"

namespace fctl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Everything the root finder needs to know about z^g = A(z).
struct RootProblem {
  int g = 0;
  int size_hint = 0;
  SeriesFunction cycle;
  std::function<std::vector<double>(int n)> coefficients;
  std::function<double(int n)> tail;
  // One branch of A(z)^{1/g}; the fixed-point fallback multiplies it by
  // each g-th root of unity.
  std::function<cplx(cplx)> root_map;
};

RootProblem make_problem(const FctlInstance& instance) {
  RootProblem p;
  p.g = instance.g();
  p.size_hint = instance.c();
  p.cycle = instance.cycle_series();
  const ArrivalModel y = instance.arrivals();
  const int c = instance.c();
  const int g = instance.g();
  p.coefficients = [y, c](int n) { return taylor_coefficients(y, c, n); };
  p.tail = [instance](int n) { return cycle_tail_mass(instance, n); };
  // Y has no zeros in the closed disk for the supported families when
  // E[Y] < 1, so log Y is continuous there.
  p.root_map = [y, c, g](cplx z) { return std::exp(double(c) / g * std::log(y(z))); };
  return p;
}

RootProblem make_problem(int g, const SeriesFunction& cycle, int size_hint) {
  RootProblem p;
  p.g = g;
  p.size_hint = size_hint;
  p.cycle = cycle;
  p.coefficients = [cycle](int n) {
    const Jet jet = cycle.taylor(0.0, n);
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) out[k] = std::max(0.0, jet[k].real());
    return out;
  };
  p.tail = [p](int n) {
    const std::vector<double> a = p.coefficients(n);
    double sum = 0.0;
    for (double v : a) sum += v;
    return std::max(0.0, 1.0 - sum);
  };
  p.root_map = [cycle, g](cplx z) { return std::exp(std::log(cycle(z)) / double(g)); };
  return p;
}

// D(z) and D'(z) for the exact cycle PGF.
std::pair<cplx, cplx> characteristic(const RootProblem& p, cplx z) {
  const Jet a = p.cycle.taylor(z, 1);
  const cplx zg1 = std::pow(z, p.g - 1);
  return {zg1 * z - a[0], double(p.g) * zg1 - a[1]};
}

// |D(z)| relative to the size of its two terms. Small roots make the
// absolute residual meaningless (both terms are tiny there).
double relative_residual(const RootProblem& p, cplx z) {
  const cplx zg = std::pow(z, p.g);
  const cplx a = p.cycle(z);
  const double scale = std::abs(zg) + std::abs(a);
  return scale == 0.0 ? 0.0 : std::abs(zg - a) / scale;
}

cplx polish(const RootProblem& p, cplx z, const RootOptions& opt) {
  double res = relative_residual(p, z);
  for (int it = 0; it < opt.max_newton_iterations; ++it) {
    auto [d, dd] = characteristic(p, z);
    if (dd == cplx(0.0) || d == cplx(0.0)) break;
    const cplx step = d / dd;
    double damping = 1.0;
    cplx next = z - step;
    double next_res = relative_residual(p, next);
    for (int h = 0; h < 30 && next_res > res; ++h) {
      damping *= 0.5;
      next = z - damping * step;
      next_res = relative_residual(p, next);
    }
    const double moved = std::abs(next - z);
    if (next_res <= res) {
      z = next;
      res = next_res;
    }
    const bool converged = std::abs(d) < opt.newton_tolerance && res < 1e-14;
    if (moved <= 4.0 * kEps * std::max(1.0, std::abs(z)) || (converged && moved < 1e-14)) break;
  }
  return z;
}

// Parlett–Reinsch diagonal similarity scaling by powers of two.
void balance(Eigen::MatrixXd& a) {
  const double radix = 2.0;
  const double sqrdx = radix * radix;
  const Eigen::Index n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

void symmetrize_conjugates(std::vector<cplx>& roots) {
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    const cplx target = std::conj(roots[i]);
    std::size_t best = i;
    double best_dist = std::abs(roots[i] - target);
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(roots[j] - target);
      if (d < best_dist) {
        best = j;
        best_dist = d;
      }
    }
    if (best == i) {
      roots[i].imag(0.0);
    } else if (best_dist < 1e-8) {
      const cplx avg = 0.5 * (roots[i] + std::conj(roots[best]));
      roots[i] = avg;
      roots[best] = std::conj(avg);
      used[best] = true;
    }
  }
}

void sort_roots(std::vector<cplx>& roots) {
  auto key = [](cplx z) {
    double a = std::arg(z);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    if (std::abs(z.imag()) == 0.0 && z.real() > 0.0) a = 0.0;
    return std::pair<double, double>(a, std::abs(z));
  };
  std::sort(roots.begin(), roots.end(), [&](cplx a, cplx b) { return key(a) < key(b); });
}

int winding_count(const RootProblem& p) {
  const double r0 = compute_r0(p.g, p.cycle);
  double cap = kContourRadiusCap;
  if (std::isfinite(p.cycle.radius())) cap = std::min(cap, p.cycle.radius() * (1.0 - 1e-9));
  ContourSpec spec;
  spec.radius = 1.0 + 0.5 * (std::min(r0, cap) - 1.0);
  spec.tolerance = 1e-6;
  const cplx count = contour_quadrature(
      [&p](cplx z) {
        auto [d, dd] = characteristic(p, z);
        return dd / d;
      },
      spec);
  return static_cast<int>(std::lround(count.real()));
}

void fill_residuals(RootSet& rs, const RootProblem& p) {
  rs.residuals.clear();
  for (cplx z : rs.roots) rs.residuals.push_back(std::abs(characteristic(p, z).first));
}

CertificationReport certify_problem(const RootSet& rs, const RootProblem& p) {
  CertificationReport rep;
  std::ostringstream note;

  rep.winding_count = winding_count(p);
  rep.count_ok = rep.winding_count == p.g && static_cast<int>(rs.roots.size()) == p.g;
  if (!rep.count_ok) {
    note << "argument-principle count " << rep.winding_count << ", roots found "
         << rs.roots.size() << ", expected " << p.g;
    rep.diagnostics.push_back(note.str());
    note.str("");
  }

  const int n = rs.truncation_order;
  const std::vector<double> a = p.coefficients(n);
  rep.tail_mass = p.tail(n);
  rep.bound_ok = true;
  for (std::size_t j = 0; j < rs.roots.size(); ++j) {
    const cplx z = rs.roots[j];
    const double modulus = std::abs(z);
    cplx an = 0.0;
    double magnitude = 0.0;
    for (int k = n; k >= 0; --k) {
      an = an * z + a[k];
      magnitude = magnitude * modulus + a[k];
    }
    const double dn = std::abs(std::pow(z, p.g) - an);
    const double residual = std::abs(characteristic(p, z).first);
    const double slack = residual + 64.0 * kEps * (magnitude + std::pow(modulus, p.g));
    const double bound = rep.tail_mass * std::pow(std::max(1.0, modulus), n) + slack;
    rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, dn / bound);
    if (dn > bound) rep.bound_ok = false;
  }
  if (!rep.bound_ok) {
    note << "truncation bound violated: worst |D_n(z_j)| / bound = " << rep.worst_bound_ratio;
    rep.diagnostics.push_back(note.str());
    note.str("");
  }

  rep.truncation_ok = rep.tail_mass <= kTruncationTailLimit;
  if (!rep.truncation_ok) {
    note << "truncation order " << n << " leaves tail mass " << rep.tail_mass;
    rep.diagnostics.push_back(note.str());
    note.str("");
  }
  rep.max_seed_displacement = rs.max_seed_displacement;
  if (rs.fallback_used) {
    rep.diagnostics.push_back("polynomial seeds missed roots; fixed-point branch search used");
  }

  const bool residuals_ok = rs.max_residual() < 1e-11;
  if (!residuals_ok) rep.diagnostics.push_back("root residual exceeds 1e-11");
  rep.certified = rep.count_ok && rep.bound_ok && rep.truncation_ok && residuals_ok;
  return rep;
}

RootSet solve(const RootProblem& p, const RootOptions& opt) {
  RootSet rs;
  rs.g = p.g;
  rs.truncation_order =
      opt.truncation_order > 0 ? opt.truncation_order : default_truncation_order(p.size_hint, p.g);
  const int n = rs.truncation_order;

  // D_n(z) = z^g - Σ_{k<=n} a_k z^k.
  std::vector<double> poly(static_cast<std::size_t>(std::max(n, p.g)) + 1, 0.0);
  const std::vector<double> a = p.coefficients(n);
  for (int k = 0; k <= n; ++k) poly[k] -= a[k];
  poly[p.g] += 1.0;

  std::vector<cplx> seeds;
  for (cplx z : polynomial_roots(poly)) {
    if (std::abs(z) <= opt.seed_radius) seeds.push_back(z);
  }
  // The seed closest to 1 stands for the pinned root.
  if (!seeds.empty()) {
    auto nearest = std::min_element(seeds.begin(), seeds.end(), [](cplx x, cplx y) {
      return std::abs(x - 1.0) < std::abs(y - 1.0);
    });
    if (std::abs(*nearest - 1.0) < 1e-4) seeds.erase(nearest);
  }

  std::vector<cplx> found;
  std::vector<double> found_residual;
  auto accept = [&](cplx z) {
    if (std::abs(z) > 1.0 + 1e-9 || std::abs(z - 1.0) < opt.merge_tolerance) return false;
    const double res = relative_residual(p, z);
    if (!(res < 1e-10)) return false;
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (std::abs(found[i] - z) < opt.merge_tolerance) {
        if (res < found_residual[i]) {
          found[i] = z;
          found_residual[i] = res;
        }
        return false;
      }
    }
    found.push_back(z);
    found_residual.push_back(res);
    return true;
  };
  for (cplx seed : seeds) {
    const cplx z = polish(p, seed, opt);
    if (accept(z)) rs.max_seed_displacement = std::max(rs.max_seed_displacement, std::abs(z - seed));
  }

  // Fixed-point search z <- ω^k A(z)^{1/g} on each branch for missing roots.
  if (static_cast<int>(found.size()) < p.g - 1) {
    rs.fallback_used = true;
    for (int k = 1; k < p.g && static_cast<int>(found.size()) < p.g - 1; ++k) {
      const cplx omega = std::polar(1.0, 2.0 * std::numbers::pi * k / p.g);
      cplx z = 0.5 * omega;
      for (int it = 0; it < 2000; ++it) {
        const cplx next = omega * p.root_map(z);
        const bool settled = std::abs(next - z) < 1e-15;
        z = next;
        if (settled) break;
      }
      accept(polish(p, z, opt));
    }
  }

  symmetrize_conjugates(found);
  sort_roots(found);
  rs.roots.push_back(1.0);
  rs.roots.insert(rs.roots.end(), found.begin(), found.end());
  fill_residuals(rs, p);
  for (cplx z : rs.roots) {
    cplx an = 0.0;
    for (int k = n; k >= 0; --k) an = an * z + a[k];
    rs.truncated_residuals.push_back(std::abs(std::pow(z, p.g) - an));
  }
  rs.report = certify_problem(rs, p);

  if (static_cast<int>(rs.roots.size()) != p.g) {
    std::ostringstream msg;
    msg << "root finder located " << rs.roots.size() << " of " << p.g
        << " roots of z^g = A(z) (argument-principle count " << rs.report.winding_count
        << ", truncation order " << n << ")";
    throw CertificationError(msg.str(), static_cast<int>(rs.roots.size()), p.g,
                             rs.report.winding_count);
  }
  return rs;
}

}  // namespace

double RootSet::max_residual() const {
  double m = 0.0;
  for (double r : residuals) m = std::max(m, r);
  return m;
}

int default_truncation_order(int c, int g) { return std::max(100, 50 + std::max(c, g)); }

std::vector<cplx> polynomial_roots(const std::vector<double>& coefficients) {
  std::size_t lo = 0;
  while (lo < coefficients.size() && coefficients[lo] == 0.0) ++lo;
  std::size_t hi = coefficients.size();
  while (hi > lo && coefficients[hi - 1] == 0.0) --hi;
  std::vector<cplx> roots(lo, cplx(0.0));
  if (hi <= lo + 1) return roots;

  const Eigen::Index degree = static_cast<Eigen::Index>(hi - lo - 1);
  const double lead = coefficients[hi - 1];
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (Eigen::Index j = 0; j < degree; ++j) {
    companion(0, j) = -coefficients[lo + static_cast<std::size_t>(degree - 1 - j)] / lead;
  }
  for (Eigen::Index i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  balance(companion);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) throw SolverError("companion eigenvalue solve failed");
  for (Eigen::Index i = 0; i < degree; ++i) roots.push_back(solver.eigenvalues()[i]);
  return roots;
}

double cycle_tail_mass(const FctlInstance& instance, int n) {
  const ArrivalModel& y = instance.arrivals();
  const int c = instance.c();
  auto sum_terms = [](double term, auto next) {
    // Sum a decreasing tail until the terms stop contributing.
    double sum = 0.0;
    for (int i = 0; i < 1000000 && term > 0.0; ++i) {
      sum += term;
      if (term < sum * 1e-18) break;
      term = next(term, i);
    }
    return sum;
  };
  switch (y.kind()) {
    case CountPgf::Kind::poisson: {
      const double mu = c * y.parameter();
      if (mu == 0.0) return 0.0;
      const double k0 = n + 1.0;
      const double first = std::exp(k0 * std::log(mu) - mu - std::lgamma(k0 + 1.0));
      return sum_terms(first, [&](double t, int i) { return t * mu / (k0 + i + 1.0); });
    }
    case CountPgf::Kind::geometric: {
      // Y^c is negative binomial: a_k = C(k+c-1, k) (1-q)^c q^k.
      const double q = y.parameter() / (1.0 + y.parameter());
      const double k0 = n + 1.0;
      const double first = std::exp(std::lgamma(k0 + c) - std::lgamma(k0 + 1.0) - std::lgamma(double(c)) +
                                    c * std::log1p(-q) + k0 * std::log(q));
      return sum_terms(first, [&](double t, int i) {
        const double k = k0 + i;
        return t * q * (k + c) / (k + 1.0);
      });
    }
    case CountPgf::Kind::bernoulli:
    case CountPgf::Kind::finite_support: {
      const int degree = static_cast<int>(y.weights().empty() ? 1 : y.weights().size() - 1) * c;
      const int top = y.kind() == CountPgf::Kind::bernoulli ? c : degree;
      if (top <= n) return 0.0;
      const std::vector<double> all = taylor_coefficients(y, c, top);
      double sum = 0.0;
      for (int k = top; k > n; --k) sum += all[k];
      return sum;
    }
  }
  return 0.0;
}

RootSet find_roots(const FctlInstance& instance, const RootOptions& options) {
  return solve(make_problem(instance), options);
}

RootSet find_roots(int g, const SeriesFunction& cycle_pgf, int size_hint,
                   const RootOptions& options) {
  if (g < 1) throw std::invalid_argument("find_roots: g must be >= 1");
  return solve(make_problem(g, cycle_pgf, size_hint), options);
}

RootSet lambert_roots(const FctlInstance& instance) {
  if (instance.arrivals().kind() != CountPgf::Kind::poisson) {
    throw std::invalid_argument("lambert_roots requires Poisson arrivals");
  }
  const int g = instance.g();
  const double a = instance.cycle_mean() / g;  // cλ/g
  RootSet rs;
  rs.g = g;
  rs.truncation_order = default_truncation_order(instance.c(), g);
  rs.roots.push_back(1.0);
  for (int k = 1; k < g; ++k) {
    if (a == 0.0) {
      rs.roots.push_back(0.0);
      continue;
    }
    const cplx x = -a * std::polar(1.0, 2.0 * std::numbers::pi * k / g) * std::exp(-a);
    rs.roots.push_back(-lambert_w(x) / a);
  }
  std::vector<cplx> rest(rs.roots.begin() + 1, rs.roots.end());
  symmetrize_conjugates(rest);
  sort_roots(rest);
  std::copy(rest.begin(), rest.end(), rs.roots.begin() + 1);
  const RootProblem p = make_problem(instance);
  fill_residuals(rs, p);
  const std::vector<double> coeff = p.coefficients(rs.truncation_order);
  for (cplx z : rs.roots) {
    cplx an = 0.0;
    for (int k = rs.truncation_order; k >= 0; --k) an = an * z + coeff[k];
    rs.truncated_residuals.push_back(std::abs(std::pow(z, g) - an));
  }
  rs.report = certify_problem(rs, p);
  return rs;
}

CertificationReport certify(const RootSet& roots, const FctlInstance& instance) {
  return certify_problem(roots, make_problem(instance));
}

}  // namespace fctl
