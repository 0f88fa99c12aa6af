// Acceptance checks. Usage: fctl_acceptance [criterion ...] (default: all).
// Prints one PASS/FAIL line per criterion (plus clearly labelled
// supplementary lines) and exits non-zero when a criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../corpus.hpp"
#include "fctl/classic.hpp"
#include "fctl/contour.hpp"
#include "fctl/extensions.hpp"
#include "fctl/roots.hpp"
#include "fctl/sim.hpp"

using namespace fctl;
using fctl::testing::corpus;
using fctl::testing::is_small;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  /// Extra lines printed after the criterion line; they never change the verdict.
  std::vector<std::pair<bool, std::string>> supplementary;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }
double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }
/// Relative above 1, absolute below.
double mixed(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

const std::vector<double> kPoints{0.0, 0.25, 0.5, 0.75, 1.0};

FctlInstance poisson(int g, int r, double lambda) {
  return FctlInstance(g, r, ArrivalModel::poisson(lambda));
}

// 1. Tail probability P(X_g > 20) from both backends.
Outcome criterion1() {
  Outcome o;
  struct Target {
    double lambda, value, tol;
  };
  std::ostringstream detail, start;
  bool start_pass = true;
  for (const Target t : {Target{0.3, 0.002, 0.0005}, Target{0.38, 0.32, 0.005}}) {
    const FctlInstance in = poisson(20, 30, t.lambda);
    const QueueDistribution pc = ContourSolution(in).pmf_overflow();
    const QueueDistribution pr = RootSolution(in).pmf_overflow();
    for (const auto& [name, pmf] : {std::pair{"contour", &pc}, std::pair{"roots", &pr}}) {
      const double tail = pmf->survival(20);
      const bool ok = std::abs(tail - t.value) <= t.tol;
      o.pass = o.pass && ok;
      detail << " lambda=" << t.lambda << " " << name << " P(X_g>20)=" << fmt(tail) << " (target "
             << t.value << "±" << t.tol << ")";
      const double tail0 = cycle_profile(in, *pmf).start_of_green().survival(20);
      const bool ok0 = std::abs(tail0 - t.value) <= t.tol;
      start_pass = start_pass && ok0;
      start << " lambda=" << t.lambda << " " << name << " P(X_0>20)=" << fmt(tail0);
    }
  }
  o.detail = "tail probability:" + detail.str();
  o.supplementary.emplace_back(start_pass, "same targets for the queue at the start of green:" + start.str());
  return o;
}

// 2. Effective green P(G = g).
Outcome criterion2() {
  Outcome o;
  std::ostringstream d;
  for (double lambda : {0.2, 0.38}) {
    const FctlInstance in = poisson(20, 30, lambda);
    const ContourSolution cs(in);
    const RootSolution rs(in);
    const double pc = effective_green(cycle_profile(in, cs.pmf_overflow())).at(20);
    const double pr = effective_green(rs.boundary(), 20).at(20);
    for (double p : {pc, pr}) {
      const bool ok = lambda == 0.2 ? p < 0.005 : std::abs(p - 0.71) <= 0.005;
      o.pass = o.pass && ok;
    }
    d << " lambda=" << lambda << " P(G=g) contour=" << fmt(pc) << " roots=" << fmt(pr);
  }
  o.detail = "effective green (need <0.005 at 0.2, 0.71±0.005 at 0.38):" + d.str();
  return o;
}

// 3. Backend equivalence on the corpus.
Outcome criterion3() {
  Outcome o;
  double pgf = 0.0, moments = 0.0;
  std::string worst;
  int count = 0;
  std::map<CountPgf::Kind, int> kinds;
  std::map<int, int> gs;
  for (const FctlInstance& in : corpus()) {
    const ContourSolution cs(in);
    const RootSolution rs(in);
    for (double w : kPoints) {
      const double e = rel(cs.eval_pgf(w), rs.eval_pgf(w));
      if (e > pgf) {
        pgf = e;
        worst = in.describe();
      }
    }
    moments = std::max({moments, mixed(cs.mean_overflow(), rs.mean_overflow()),
                        mixed(cs.variance_overflow(), rs.variance_overflow())});
    ++count;
    ++kinds[in.arrivals().kind()];
    ++gs[in.g()];
  }
  o.pass = pgf <= 1e-9 && moments <= 1e-8 && count >= 20;
  o.detail = std::to_string(count) + " instances, max relative PGF gap " + fmt(pgf) + " (tol 1e-9, worst " +
             worst + "), max moment gap " + fmt(moments) + " (tol 1e-8, relative above 1)";
  return o;
}

// 4. Exact chain vs both backends on the small instances.
Outcome criterion4() {
  Outcome o;
  double worst = 0.0;
  int count = 0;
  for (const FctlInstance& in : corpus()) {
    if (!is_small(in)) continue;
    const ExactStationary ex = exact_stationary(in);
    const int kmax = ex.overflow.max_index();
    worst = std::max({worst, total_variation(ContourSolution(in).pmf_overflow(kmax), ex.overflow),
                      total_variation(RootSolution(in).pmf_overflow(kmax), ex.overflow)});
    ++count;
  }
  o.pass = worst <= 1e-8 && count > 0;
  o.detail = std::to_string(count) + " small instances, max total variation " + fmt(worst) + " (tol 1e-8)";
  return o;
}

// 5. Bernoulli queue equals the bulk-service queue; bulk mean bounds the Poisson mean.
Outcome criterion5() {
  Outcome o;
  double gap = 0.0;
  const std::vector<FctlInstance> bern{
      FctlInstance(1, 1, ArrivalModel::bernoulli(0.3)), FctlInstance(2, 1, ArrivalModel::bernoulli(0.3)),
      FctlInstance(5, 7, ArrivalModel::bernoulli(0.35)), FctlInstance(20, 30, ArrivalModel::bernoulli(0.3)),
      FctlInstance(20, 10, ArrivalModel::bernoulli(0.5))};
  for (const FctlInstance& in : bern) {
    const ContourSolution fctl(in);
    const ContourSolution bulk = bulk_service(in.g(), in.cycle_series());
    for (int k = 0; k < 10; ++k) {
      const double w = k / 9.0;
      gap = std::max(gap, rel(fctl.eval_pgf(w), bulk.eval_pgf(w, PgfForm::pk2)));
    }
  }
  double min_excess = kInfinity;
  for (const FctlInstance& in : corpus()) {
    if (in.arrivals().kind() != CountPgf::Kind::poisson) continue;
    const double excess = bulk_service_mean(in.g(), in.cycle_series()) - ContourSolution(in).mean_overflow();
    min_excess = std::min(min_excess, excess);
  }
  o.pass = gap <= 1e-9 && min_excess >= 0.0;
  o.detail = "5 Bernoulli instances x 10 points, max relative gap " + fmt(gap) +
             " (tol 1e-9); Poisson min(bulk mean - queue mean) = " + fmt(min_excess) + " (need >= 0)";
  return o;
}

// 6. Root certification.
Outcome criterion6() {
  Outcome o;
  double residual = 0.0, lambert = 0.0;
  int bad = 0;
  std::string failures;
  for (const FctlInstance& in : corpus()) {
    const RootSet rs = find_roots(in);
    const bool ok = static_cast<int>(rs.roots.size()) == in.g() && rs.max_residual() < 1e-11 &&
                    rs.report.winding_count == in.g() && rs.report.bound_ok;
    residual = std::max(residual, rs.max_residual());
    if (!ok) {
      ++bad;
      failures += " [" + in.describe() + "]";
    }
    if (in.arrivals().kind() == CountPgf::Kind::poisson) {
      const RootSet lw = lambert_roots(in);
      for (const cplx z : rs.roots) {
        double best = kInfinity;
        for (const cplx w : lw.roots) best = std::min(best, std::abs(z - w));
        lambert = std::max(lambert, best);
      }
    }
  }
  o.pass = bad == 0 && lambert <= 1e-9;
  o.detail = "count/residual/winding/bound failures: " + std::to_string(bad) + failures +
             "; max residual " + fmt(residual) + " (tol 1e-11); max Lambert-W distance " + fmt(lambert) +
             " (tol 1e-9)";
  return o;
}

/// |sim - analytic| / se with the binomial error of the analytic value as a floor.
double zscore(double sim, double se, double analytic, std::uint64_t n) {
  const double floor = std::sqrt(std::max(analytic * (1.0 - analytic), 0.0) / static_cast<double>(n));
  const double s = std::max(se, floor);
  if (s == 0.0) return sim == analytic ? 0.0 : kInfinity;
  return std::abs(sim - analytic) / s;
}

struct BinCheck {
  double worst = 0.0;
  int worst_bin = -1;
  int failures = 0;
  int bins = 0;
};

BinCheck check_bins(const EmpiricalPmf& sim, const QueueDistribution& analytic, int bins) {
  BinCheck c;
  for (int k = 0; k < bins; ++k) {
    const double z = zscore(sim.at(k), sim.se_at(k), analytic.at(k), sim.samples);
    ++c.bins;
    if (z > 3.0) ++c.failures;
    if (z > c.worst) {
      c.worst = z;
      c.worst_bin = k;
    }
  }
  return c;
}

// 7. Ten million simulated cycles against the analytic results.
Outcome criterion7() {
  Outcome o;
  const FctlInstance in = poisson(20, 30, 0.36);
  const ContourSolution cs(in);
  const CycleProfile profile = cycle_profile(in, cs.pmf_overflow());
  SimConfig cfg;
  cfg.cycles = 10000000;
  cfg.seed = 20240601;
  const auto t0 = std::chrono::steady_clock::now();
  const SimReport sim = simulate(in, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const double z_mean = std::abs(sim.mean - cs.mean_overflow()) / sim.mean_se;
  const double z_var = std::abs(sim.variance - cs.variance_overflow()) / sim.variance_se;
  const BinCheck sog = check_bins(sim.start_of_green, profile.start_of_green(), 30);
  const QueueDistribution green = effective_green(profile);
  const BinCheck eg = check_bins(sim.effective_green, green, in.g() + 1);
  const QueueDistribution delay = delay_distribution(in, profile, 10);
  const BinCheck dl = check_bins(sim.delays[9], delay,
                                 std::max(delay.max_index(), static_cast<int>(sim.delays[9].pmf.size()) - 1) + 1);
  o.pass = z_mean <= 3.0 && z_var <= 3.0 && sog.failures == 0 && eg.failures == 0 && dl.failures == 0;
  std::ostringstream d;
  d << "1e7 cycles (" << fmt(secs) << " s): mean z=" << fmt(z_mean) << ", variance z=" << fmt(z_var)
    << ", start-of-green " << sog.bins << " bins max z=" << fmt(sog.worst) << " (" << sog.failures
    << " > 3), effective green " << eg.bins << " bins max z=" << fmt(eg.worst) << " (" << eg.failures
    << " > 3), slot-10 delay " << dl.bins << " bins max z=" << fmt(dl.worst) << " at " << dl.worst_bin
    << " (" << dl.failures << " > 3)";
  o.detail = d.str();
  return o;
}

// 8. Generalized variants.
Outcome criterion8() {
  Outcome o;
  const FctlInstance base = poisson(20, 30, 0.3);
  const ContourSolution standard(base);
  std::ostringstream d;

  auto collapse_gap = [&](const VariantParams& p) {
    const GeneralizedSolution gs(build_variant(base, p));
    double gap = std::max({rel(gs.mean(), standard.mean_overflow()),
                           rel(gs.variance(), standard.variance_overflow()),
                           rel(gs.prob_empty(), standard.prob_empty())});
    for (double w : kPoints) gap = std::max(gap, rel(gs.eval_pgf(w), standard.eval_pgf(w)));
    return gap;
  };
  VariantParams hes0;
  hes0.variant = Variant::hesitation;
  hes0.hesitation = 0.0;
  VariantParams point;
  point.variant = Variant::interrupted;
  point.layouts = {{30, 20, 1.0}};
  VariantParams indep;
  indep.variant = Variant::dependent_red;
  indep.red_arrivals = CountPgf::poisson(30 * 0.3);
  const double c1 = collapse_gap(hes0), c2 = collapse_gap(point), c3 = collapse_gap(indep);
  const bool collapse_ok = c1 <= 1e-9 && c2 <= 1e-9 && c3 <= 1e-9;
  d << "collapses (tol 1e-9): hesitation p=0 " << fmt(c1) << ", point-mass layout " << fmt(c2)
    << ", independent red " << fmt(c3) << ";";

  VariantParams hes;
  hes.variant = Variant::hesitation;
  hes.hesitation = 0.1;
  VariantParams turn;
  turn.variant = Variant::right_turn;
  VariantParams random_green;
  random_green.variant = Variant::interrupted;
  random_green.layouts = {{30, 20, 0.5}, {25, 25, 0.3}, {35, 15, 0.2}};
  VariantParams dep;
  dep.variant = Variant::dependent_red;
  dep.red_arrivals = CountPgf::geometric(9.0);

  bool sim_ok = true;
  for (const VariantParams& p : {hes, turn, random_green, dep}) {
    const GeneralizedInstance gi = build_variant(base, p);
    const GeneralizedSolution gs(gi);
    SimConfig cfg;
    cfg.cycles = 1000000;
    cfg.seed = 20240602;
    const SimReport sim = simulate(gi, cfg);
    const double zm = std::abs(sim.mean - gs.mean()) / sim.mean_se;
    const double z0 = zscore(sim.overflow.at(0), sim.overflow.se_at(0), gs.prob_empty(), sim.overflow.samples);
    sim_ok = sim_ok && zm <= 3.0 && z0 <= 3.0;
    d << " " << to_string(gi.variant) << " mean z=" << fmt(zm) << " P(X=0) z=" << fmt(z0);
  }
  o.pass = collapse_ok && sim_ok;
  o.detail = d.str();
  return o;
}

// 9. Normalization, jet derivatives vs finite differences, quadrature convergence.
Outcome criterion9() {
  Outcome o;
  double norm = 0.0, fd = 0.0, slowest = 0.0;
  int non_geometric = 0;
  std::string bad;
  for (const FctlInstance& in : corpus()) {
    const ContourSolution cs(in);
    const RootSolution rs(in);
    norm = std::max({norm, std::abs(cs.eval_pgf(1.0) - 1.0), std::abs(rs.eval_pgf(1.0) - 1.0)});

    // Fourth-order central differences of X_g about w = 1, with a step
    // proportional to the distance to the nearest singularity.
    const double h = std::min(0.01 * (cs.spec().radius - 1.0), 5e-3);
    auto f = [&](double w) { return cs.eval_pgf(w).real(); };
    const double f2p = f(1 + 2 * h), f1p = f(1 + h), f0 = f(1.0), f1m = f(1 - h), f2m = f(1 - 2 * h);
    const double d1 = (-f2p + 8 * f1p - 8 * f1m + f2m) / (12 * h);
    const double d2 = (-f2p + 16 * f1p - 30 * f0 + 16 * f1m - f2m) / (12 * h * h);
    const Jet jet = cs.eval_pgf_jet(1.0, 2);
    const double j1 = jet[1].real(), j2 = 2.0 * jet[2].real();
    const double e1 = std::abs(d1 - j1) / std::max(std::abs(j1), 1e-12);
    const double e2 = std::abs(d2 - j2) / std::max(std::abs(j2), 1e-12);
    fd = std::max({fd, e1, e2});

    // Trapezoidal estimates of the integral at w = 1/2 for N = 8, 16, ...
    const SeriesFunction& b = cs.departure_pgf();
    const SeriesFunction& a = cs.cycle_pgf();
    const int g = in.g();
    const double w = 0.5;
    const cplx bw = b(w);
    auto integrand = [&](cplx z) {
      const cplx bz = b(z);
      const cplx weight = (b.derivative(z, 1) * z - bz) / (z - bz) * std::log(1.0 - a(z) / std::pow(z, g));
      return weight * (w - bw) / (z * bw - w * bz);
    };
    std::vector<cplx> estimates;
    for (int n = 8; n <= 4096; n *= 2) estimates.push_back(trapezoid_circle(integrand, cs.spec().radius, n));
    const cplx reference = estimates.back();
    std::vector<double> err;
    for (std::size_t k = 0; k + 1 < estimates.size(); ++k) err.push_back(std::abs(estimates[k] - reference));
    bool geometric = err.back() <= 1e-12;
    for (std::size_t k = 0; k + 1 < err.size(); ++k) {
      if (err[k] > 1e-12) {
        const double ratio = err[k + 1] / err[k];
        slowest = std::max(slowest, ratio);
        if (ratio > 0.5) geometric = false;
      }
    }
    if (!geometric) {
      ++non_geometric;
      bad += " [" + in.describe() + "]";
    }
  }
  o.pass = norm < 1e-10 && fd <= 1e-6 && non_geometric == 0;
  o.detail = "max |X_g(1)-1| " + fmt(norm) + " (tol 1e-10); max relative jet-vs-difference gap " + fmt(fd) +
             " (tol 1e-6); slowest error ratio per doubling " + fmt(slowest) + "; non-geometric: " +
             std::to_string(non_geometric) + bad;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [k, f] : criteria) selected.push_back(k);
  }
  bool all = true;
  for (int k : selected) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::printf("unknown criterion %d\n", k);
      return 2;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s  %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    for (const auto& [ok, text] : o.supplementary) {
      std::printf("criterion %d (supplementary): %s  %s\n", k, ok ? "PASS" : "FAIL", text.c_str());
    }
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
