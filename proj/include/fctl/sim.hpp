#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fctl/classic.hpp"
#include "fctl/distribution.hpp"
#include "fctl/extensions.hpp"
#include "fctl/pgf.hpp"

namespace fctl {

struct SimConfig {
  std::int64_t cycles = 1000000;  // measured cycles after warm-up
  std::int64_t warmup = 10000;
  std::uint64_t seed = 1;
  /// State cap for exact_stationary (0 = automatic).
  int truncation = 0;
  /// Number of batches used for the batch-means standard errors.
  int batches = 100;
};

/// Empirical pmf with a standard error per bin.
struct EmpiricalPmf {
  std::vector<double> pmf;
  std::vector<double> se;
  std::uint64_t samples = 0;

  double at(int k) const { return k >= 0 && k < static_cast<int>(pmf.size()) ? pmf[k] : 0.0; }
  double se_at(int k) const;
  double mean() const;
};

struct SimReport {
  std::string description;
  std::int64_t cycles = 0;
  std::int64_t warmup = 0;
  std::uint64_t seed = 0;
  int batches = 0;

  /// Queue at the end of green.
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  EmpiricalPmf overflow;
  /// Queue at the start of green.
  EmpiricalPmf start_of_green;
  /// Mean queue at every slot boundary (index 0 = start of green, index k =
  /// after slot k); empty when the layout varies between cycles.
  std::vector<double> slot_means;
  std::vector<double> slot_means_se;
  /// G = number of green slots until the queue first empties (g if never).
  EmpiricalPmf effective_green;
  /// delays[k-1]: delay of vehicles arriving in slot k (departure slot
  /// minus arrival slot). Empty when the layout varies between cycles.
  std::vector<EmpiricalPmf> delays;

  /// Arrivals over the measured cycles, split into those that joined the
  /// queue and those that passed without delay.
  std::uint64_t arrivals = 0;
  std::uint64_t arrivals_delayed = 0;
  std::uint64_t arrivals_passed = 0;
  /// Vehicles that met an empty queue in green yet were delayed.
  std::uint64_t empty_green_delays = 0;
  std::vector<std::string> diagnostics;
};

/// Slot-level Monte Carlo of the standard queue. Every cycle draws from its
/// own generator stream derived from (seed, cycle index).
SimReport simulate(const FctlInstance& instance, const SimConfig& config);
/// Same for a variant built by build_variant (custom instances are refused).
SimReport simulate(const GeneralizedInstance& instance, const SimConfig& config);

struct ExactStationary {
  int truncation = 0;
  QueueDistribution overflow;
  /// slots[0] = start of green, slots[k] = after slot k (slots[g] = overflow).
  CycleProfile profile;
  /// max |πP - π| for the normalized truncated operator.
  double residual = 0.0;
  /// Mass pushed beyond the truncation in one cycle from π.
  double mass_loss = 0.0;
  int iterations = 0;
};

/// Stationary distribution of the truncated cycle-to-cycle chain on
/// {0..K}, by power iteration. K grows (doubling) until the per-cycle mass
/// loss is below 1e-10; throws SolverError when that needs K > max_truncation.
ExactStationary exact_stationary(const FctlInstance& instance, int truncation = 0,
                                 int max_truncation = 20000);

}  // namespace fctl
