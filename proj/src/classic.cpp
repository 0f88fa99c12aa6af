#include "fctl/classic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fctl/errors.hpp"

namespace fctl {

namespace {

// Points at which the factorized formula is 0/0.
constexpr double kSingularNeighbourhood = 1e-4;
constexpr int kCirclePoints = 16;

// t_k = z_k / Y(z_k) for the non-unit roots.
std::vector<cplx> root_ratios(const RootSet& roots, const ArrivalModel& y) {
  std::vector<cplx> t;
  for (std::size_t k = 1; k < roots.roots.size(); ++k) t.push_back(roots.roots[k] / y(roots.roots[k]));
  return t;
}

cplx factorized(const FctlInstance& instance, const std::vector<cplx>& t, cplx w) {
  const ArrivalModel& y = instance.arrivals();
  const double scale = (instance.g() - instance.cycle_mean()) / (1.0 - y.mean());
  const cplx yw = y(w);
  cplx value = scale * (w - yw) / (std::pow(w, instance.g()) - instance.cycle_pgf(w));
  for (cplx tk : t) value *= (tk * yw - w) / (tk - 1.0);
  return value;
}

// Jets of the numerator and denominator of the factorized form.
std::pair<Jet, Jet> factorized_jets(const FctlInstance& instance, const std::vector<cplx>& t,
                                    double base, int order) {
  const ArrivalModel& y = instance.arrivals();
  const double scale = (instance.g() - instance.cycle_mean()) / (1.0 - y.mean());
  const Jet yw = y.taylor(base, order);
  const Jet w = Jet::variable(base, order);
  Jet num = (w - yw) * scale;
  for (cplx tk : t) num = num * ((yw * tk - w) / (tk - 1.0));
  const Jet den = pow(w, instance.g()) - pow(yw, instance.c());
  return {num, den};
}

double real_part_checked(cplx v, const char* what) {
  if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real()))) {
    std::ostringstream msg;
    msg << what << ": imaginary part " << v.imag() << " is not negligible";
    throw SolverError(msg.str());
  }
  return v.real();
}

}  // namespace

BoundaryProbabilities solve_boundary(const RootSet& roots, const FctlInstance& instance) {
  const int g = instance.g();
  if (static_cast<int>(roots.roots.size()) != g) {
    throw CertificationError("solve_boundary needs exactly g roots",
                             static_cast<int>(roots.roots.size()), g, roots.report.winding_count);
  }
  const std::vector<cplx> t = root_ratios(roots, instance.arrivals());
  Eigen::MatrixXcd m(g, g);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(g);
  for (int j = 0; j < g - 1; ++j) {
    cplx power = 1.0;
    for (int k = 0; k < g; ++k) {
      m(j, k) = power;
      power *= t[j];
    }
  }
  const double lead = 1.0 - instance.arrivals().mean();
  for (int k = 0; k < g; ++k) m(g - 1, k) = lead;
  rhs(g - 1) = g - instance.cycle_mean();

  // The first g-1 rows say that Q(t) = Σ_k q_k t^k vanishes at every t_j,
  // so Q(t) = κ Π_j (t - t_j); the last row fixes κ. Q is bounded by g on
  // the unit circle, so sampling the product there and taking a g-point
  // DFT recovers q to ~g² eps. Elimination on the Vandermonde block (and
  // expanding the product in the monomial basis) loses everything at g ~ 100.
  cplx at_one = 1.0;
  for (cplx tj : t) at_one *= 1.0 - tj;
  const cplx kappa = rhs(g - 1) / (lead * at_one);
  std::vector<cplx> samples(static_cast<std::size_t>(g));
  for (int m = 0; m < g; ++m) {
    const cplx u = std::polar(1.0, 2.0 * std::numbers::pi * m / g);
    cplx value = kappa;
    for (cplx tj : t) value *= u - tj;
    samples[m] = value;
  }
  Eigen::VectorXcd q(g);
  for (int k = 0; k < g; ++k) {
    cplx acc = 0.0;
    for (int m = 0; m < g; ++m) {
      acc += samples[m] * std::polar(1.0, -2.0 * std::numbers::pi * double((long long)m * k % g) / g);
    }
    q(k) = acc / double(g);
  }

  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);

  BoundaryProbabilities out;
  out.condition_estimate = 1.0 / lu.rcond();
  out.max_residual = (m * q - rhs).cwiseAbs().maxCoeff();
  double max_imag = 0.0;
  for (int k = 0; k < g; ++k) {
    out.q.push_back(q(k).real());
    max_imag = std::max(max_imag, std::abs(q(k).imag()));
  }
  if (out.condition_estimate > 1e12) {
    std::ostringstream msg;
    msg << "boundary system is ill-conditioned (condition estimate " << out.condition_estimate
        << ")";
    out.diagnostics.push_back(msg.str());
  }
  // Rows are scaled so that |entries| <= 1; compare relative to that.
  if (out.max_residual > 1e-9 * std::max(1.0, q.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "boundary system residual " << out.max_residual;
    out.diagnostics.push_back(msg.str());
  }
  if (max_imag > 1e-9) {
    std::ostringstream msg;
    msg << "boundary probabilities carry imaginary parts up to " << max_imag;
    out.diagnostics.push_back(msg.str());
  }
  return out;
}

cplx pgf_root_form(const RootSet& roots, const FctlInstance& instance, cplx w) {
  const std::vector<cplx> t = root_ratios(roots, instance.arrivals());
  // Singular points of the formula: 1 and every z_k.
  double nearest = std::abs(w - 1.0);
  cplx centre = 1.0;
  for (cplx z : roots.roots) {
    if (std::abs(w - z) < nearest) {
      nearest = std::abs(w - z);
      centre = z;
    }
  }
  if (nearest >= kSingularNeighbourhood) return factorized(instance, t, w);

  double other = kInfinity;
  for (cplx z : roots.roots) {
    if (z != centre) other = std::min(other, std::abs(z - centre));
  }
  const double h = std::min(1e-3, 0.25 * other);
  cplx sum = 0.0;
  for (int j = 0; j < kCirclePoints; ++j) {
    sum += factorized(instance, t, w + std::polar(h, 2.0 * std::numbers::pi * (j + 0.5) / kCirclePoints));
  }
  return sum / double(kCirclePoints);
}

RootSolution::RootSolution(const FctlInstance& instance, const RootOptions& options)
    : RootSolution(instance, find_roots(instance, options)) {}

RootSolution::RootSolution(const FctlInstance& instance, RootSet roots)
    : instance_(instance), roots_(std::move(roots)), boundary_(solve_boundary(roots_, instance_)) {}

Jet RootSolution::eval_pgf_jet(double base, int order) const {
  const std::vector<cplx> t = root_ratios(roots_, instance_.arrivals());
  if (std::abs(base - 1.0) < kSingularNeighbourhood) {
    // Both factors vanish at 1: divide out the common zero first.
    auto [num, den] = factorized_jets(instance_, t, 1.0, order + 1);
    return num.shifted() / den.shifted();
  }
  auto [num, den] = factorized_jets(instance_, t, base, order);
  return num / den;
}

double RootSolution::mean_overflow() const {
  return real_part_checked(eval_pgf_jet(1.0, 1)[1], "root-backend mean");
}

double RootSolution::variance_overflow() const {
  const Jet x = eval_pgf_jet(1.0, 2);
  const double first = real_part_checked(x[1], "root-backend X'(1)");
  const double second = 2.0 * real_part_checked(x[2], "root-backend X''(1)");
  return second + first - first * first;
}

double RootSolution::prob_empty() const {
  return real_part_checked(eval_pgf(0.0), "root-backend P(X=0)");
}

double RootSolution::inversion_radius() const {
  double rho = 0.999;
  for (int attempt = 0; attempt < 100; ++attempt) {
    bool clear = true;
    for (cplx z : roots_.roots) {
      if (std::abs(std::abs(z) - rho) < 2.0 * kSingularNeighbourhood) clear = false;
    }
    if (clear) break;
    rho -= 5e-4;
  }
  return rho;
}

QueueDistribution RootSolution::pmf_overflow(std::optional<int> kmax) const {
  // Long division by the jet of w^g - A(w) about 0 amplifies rounding
  // (its constant term is -A(0)), so every coefficient comes from the FFT.
  constexpr int kPoints = 4096;
  const double rho = inversion_radius();
  const std::vector<cplx> coefficients =
      invert_pgf_fft([this](cplx w) { return eval_pgf(w); }, rho, kPoints);
  const int limit = kmax ? std::min(*kmax, kPoints - 1) : kPoints - 1;
  const int chosen = kmax ? limit : std::min(default_kmax(coefficients), kPoints / 2);
  QueueDistribution dist = make_distribution(coefficients, chosen);
  std::ostringstream msg;
  msg << "FFT inversion of the root form on |w| = " << rho << " with " << kPoints << " points";
  dist.diagnostics.push_back(msg.str());
  return dist;
}

std::vector<double> CycleProfile::means() const {
  std::vector<double> out;
  for (const auto& s : slots) out.push_back(s.mean());
  return out;
}

namespace {

QueueDistribution trim(QueueDistribution d, double budget, int cap) {
  // Drop trailing entries into the tail while the dropped mass stays tiny.
  double dropped = 0.0;
  while (d.pmf.size() > 1 && dropped + d.pmf.back() < budget) {
    dropped += d.pmf.back();
    d.pmf.pop_back();
  }
  d.tail += dropped;
  if (static_cast<int>(d.pmf.size()) > cap) {
    std::ostringstream msg;
    msg << "slot distribution needs more than " << cap << " states";
    throw TruncationError(msg.str());
  }
  return d;
}

QueueDistribution green_slot(const QueueDistribution& x, const std::vector<double>& y) {
  QueueDistribution busy;
  busy.pmf.assign(x.pmf.begin() + std::min<std::size_t>(1, x.pmf.size()), x.pmf.end());
  if (busy.pmf.empty()) busy.pmf.push_back(0.0);
  busy.tail = x.tail;
  QueueDistribution out = convolve(busy, y, 0.0);
  out.pmf[0] += x.pmf.empty() ? 0.0 : x.pmf[0];
  return out;
}

}  // namespace

CycleProfile cycle_profile(const FctlInstance& instance, const QueueDistribution& overflow,
                           const ProfileOptions& options) {
  const ArrivalModel& arrivals = instance.arrivals();
  const int c = instance.c();
  // Per-step budget so that the total truncation loss over the red
  // pre-roll and one cycle stays below options.tail_tolerance.
  const double budget = options.tail_tolerance / (2.0 * (instance.r() + c + 1));
  const int ymax = std::max(1, arrivals.support_bound(budget * 1e-3));
  std::vector<double> y = arrivals.pmf(ymax);

  CycleProfile profile;
  profile.g = instance.g();
  profile.r = instance.r();
  QueueDistribution state = trim(overflow, 0.0, options.max_support);
  for (int j = 0; j < instance.r(); ++j) {
    state = trim(convolve(state, y, 0.0), budget, options.max_support);
  }
  profile.slots.push_back(state);
  for (int k = 1; k <= c; ++k) {
    if (k <= instance.g()) {
      state = trim(green_slot(state, y), budget, options.max_support);
    } else {
      state = trim(convolve(state, y, 0.0), budget, options.max_support);
    }
    profile.slots.push_back(state);
  }
  return profile;
}

double boundary_mismatch(const BoundaryProbabilities& q, const CycleProfile& profile) {
  double worst = 0.0;
  for (std::size_t k = 0; k < q.q.size() && k < profile.slots.size(); ++k) {
    worst = std::max(worst, std::abs(q.q[k] - profile.slots[k].at(0)));
  }
  return worst;
}

QueueDistribution effective_green(const BoundaryProbabilities& q, int g) {
  if (static_cast<int>(q.q.size()) != g) throw std::invalid_argument("effective_green: need g values");
  QueueDistribution d;
  d.pmf.resize(static_cast<std::size_t>(g) + 1);
  d.pmf[0] = q.q[0];
  for (int k = 1; k < g; ++k) d.pmf[k] = q.q[k] - q.q[k - 1];
  d.pmf[g] = 1.0 - q.q[g - 1];
  for (double& p : d.pmf) {
    if (p < 0.0) {
      if (p < -1e-9) {
        std::ostringstream msg;
        msg << "non-monotone boundary probabilities (entry " << p << ")";
        d.diagnostics.push_back(msg.str());
      }
      p = 0.0;
    }
  }
  return d;
}

QueueDistribution effective_green(const CycleProfile& profile) {
  BoundaryProbabilities q;
  for (int k = 0; k < profile.g; ++k) q.q.push_back(profile.slots[k].at(0));
  return effective_green(q, profile.g);
}

int delay_slots(int g, int r, int k, int vehicles_ahead) {
  const int c = g + r;
  const int j = vehicles_ahead + 1;  // departs in the j-th green slot after slot k
  const int remaining = std::max(0, g - k);
  if (j <= remaining) return j;
  const int later = j - remaining;
  return (c - k) + ((later - 1) / g) * c + ((later - 1) % g) + 1;
}

QueueDistribution delay_distribution(const FctlInstance& instance, const CycleProfile& profile,
                                     int slot, DelayConvention convention) {
  const int g = instance.g();
  const int r = instance.r();
  const int c = instance.c();
  if (slot < 1 || slot > c) {
    std::ostringstream msg;
    msg << "delay slot must lie in 1.." << c << ", got " << slot;
    throw std::invalid_argument(msg.str());
  }
  const ArrivalModel& y = instance.arrivals();
  QueueDistribution out;
  if (y.mean() == 0.0) {
    out.pmf = {1.0};
    out.diagnostics.push_back("no arrivals; delay is degenerate at 0");
    return out;
  }

  // Co-arrivals ahead of the tagged vehicle.
  std::vector<double> ahead{1.0};
  if (convention == DelayConvention::uniform_position) {
    const int jmax = y.support_bound(1e-16);
    ahead.assign(static_cast<std::size_t>(jmax) + 1, 0.0);
    double survival = 1.0;
    for (int j = 0; j <= jmax; ++j) {
      survival -= y.probability(j);
      ahead[j] = std::max(0.0, survival) / y.mean();
    }
  }

  const QueueDistribution& start = profile.slots[static_cast<std::size_t>(slot - 1)];
  const bool green = slot <= g;
  auto add = [&out](int d, double p) {
    if (d >= static_cast<int>(out.pmf.size())) out.pmf.resize(static_cast<std::size_t>(d) + 1, 0.0);
    out.pmf[d] += p;
  };
  for (int n = 0; n <= start.max_index(); ++n) {
    const double pn = start.pmf[n];
    if (pn == 0.0) continue;
    if (green && n == 0) {
      add(0, pn);
      continue;
    }
    const int base = green ? n - 1 : n;
    for (std::size_t j = 0; j < ahead.size(); ++j) {
      if (ahead[j] == 0.0) continue;
      add(delay_slots(g, r, slot, base + static_cast<int>(j)), pn * ahead[j]);
    }
  }
  double total = 0.0;
  for (double p : out.pmf) total += p;
  out.tail = std::max(0.0, 1.0 - total);
  return out;
}

}  // namespace fctl
