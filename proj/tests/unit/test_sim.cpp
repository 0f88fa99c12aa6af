#include <doctest.h>

#include <cmath>

#include "fctl/errors.hpp"
#include "fctl/sim.hpp"

using namespace fctl;

namespace {

SimConfig quick(std::uint64_t seed, std::int64_t cycles = 50000) {
  SimConfig cfg;
  cfg.cycles = cycles;
  cfg.warmup = 1000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("no arrivals means an empty queue") {
  const SimReport r = simulate(FctlInstance(3, 2, ArrivalModel::poisson(0.0)), quick(1, 1000));
  CHECK(r.mean == 0.0);
  CHECK(r.arrivals == 0);
  CHECK(r.overflow.at(0) == 1.0);
  CHECK(r.effective_green.at(0) == 1.0);
}

TEST_CASE("runs are reproducible and depend on the seed") {
  const FctlInstance in(5, 5, ArrivalModel::poisson(0.3));
  const SimReport a = simulate(in, quick(42));
  const SimReport b = simulate(in, quick(42));
  const SimReport c = simulate(in, quick(43));
  CHECK(a.mean == b.mean);
  CHECK(a.overflow.pmf == b.overflow.pmf);
  CHECK(a.arrivals == b.arrivals);
  CHECK(a.mean != c.mean);
}

TEST_CASE("arrival bookkeeping") {
  const FctlInstance in(5, 5, ArrivalModel::poisson(0.3));
  const SimReport r = simulate(in, quick(3));
  CHECK(r.arrivals == r.arrivals_delayed + r.arrivals_passed);
  CHECK(r.empty_green_delays == 0);
  // About 3 arrivals per cycle.
  const double per_cycle = static_cast<double>(r.arrivals) / static_cast<double>(r.cycles);
  CHECK(std::abs(per_cycle - 3.0) < 0.05);
  REQUIRE(r.slot_means.size() == static_cast<std::size_t>(in.c() + 1));
  REQUIRE(r.delays.size() == static_cast<std::size_t>(in.c()));
  CHECK(std::abs(r.slot_means[in.g()] - r.mean) < 1e-12);
}

TEST_CASE("truncated chain is stationary and conserves mass") {
  const FctlInstance in(5, 5, ArrivalModel::poisson(0.3));
  const ExactStationary ex = exact_stationary(in);
  CHECK(ex.residual < 1e-12);
  CHECK(ex.mass_loss < 1e-10);
  CHECK(std::abs(ex.overflow.total() - 1.0) < 1e-10);
  REQUIRE(static_cast<int>(ex.profile.slots.size()) == in.c() + 1);
  CHECK(total_variation(ex.profile.slots[in.c()], ex.profile.slots[0]) < 1e-10);
  CHECK(total_variation(ex.profile.slots[in.g()], ex.overflow) < 1e-12);

  // Starting from a small cap, the truncation grows until the loss is negligible.
  const ExactStationary grown = exact_stationary(in, 4);
  CHECK(grown.truncation > 4);
  CHECK(grown.mass_loss < 1e-10);
  CHECK_THROWS_AS(exact_stationary(FctlInstance(20, 30, ArrivalModel::poisson(0.38)), 8, 16), SolverError);
}

TEST_CASE("Bernoulli queue: simulation within its error bars of the exact chain") {
  // g = 2, r = 1: the overflow queue is a small birth-death-like chain.
  const FctlInstance in(2, 1, ArrivalModel::bernoulli(0.3));
  const ExactStationary ex = exact_stationary(in);
  const SimReport sim = simulate(in, quick(5, 400000));
  for (int k = 0; k <= 4; ++k) {
    CAPTURE(k);
    const double p = ex.overflow.at(k);
    const double floor = std::sqrt(p * (1 - p) / static_cast<double>(sim.overflow.samples));
    CHECK(std::abs(sim.overflow.at(k) - p) <= 4.0 * std::max(sim.overflow.se_at(k), floor));
  }
  CHECK(std::abs(sim.mean - ex.overflow.mean()) <= 4.0 * sim.mean_se);
}

TEST_CASE("empirical pmf helpers") {
  EmpiricalPmf e;
  e.pmf = {0.5, 0.25, 0.25};
  e.se = {0.01, 0.02, 0.03};
  CHECK(e.at(5) == 0.0);
  CHECK(e.se_at(1) == 0.02);
  CHECK(e.mean() == doctest::Approx(0.75));
}

TEST_CASE("custom generalized instances are refused") {
  GeneralizedInstance gi;
  gi.variant = Variant::custom;
  CHECK_THROWS(simulate(gi, quick(1, 10)));
}
