#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "fctl/distribution.hpp"
#include "fctl/jet.hpp"
#include "fctl/pgf.hpp"
#include "fctl/roots.hpp"

namespace fctl {

/// q_k = P(X_k = 0), k = 0..g-1: the queue is empty after k green slots
/// (X_0 is the queue at the start of green).
struct BoundaryProbabilities {
  std::vector<double> q;
  /// 1 / (reciprocal condition estimate) of the linear system.
  double condition_estimate = 0.0;
  double max_residual = 0.0;
  std::vector<std::string> diagnostics;
};

/// Solves Σ_k q_k t_j^k = 0 (t_j = z_j / Y(z_j)) for the g-1 non-unit roots
/// together with (1 - Y'(1)) Σ_k q_k = g - A'(1).
BoundaryProbabilities solve_boundary(const RootSet& roots, const FctlInstance& instance);

/// Root-factorized X_g(w). Removable singularities at w = 1 and w = z_k are
/// evaluated as the mean over a small circle around w.
cplx pgf_root_form(const RootSet& roots, const FctlInstance& instance, cplx w);

/// Root-backed stationary overflow queue.
class RootSolution {
 public:
  explicit RootSolution(const FctlInstance& instance, const RootOptions& options = {});
  RootSolution(const FctlInstance& instance, RootSet roots);

  const FctlInstance& instance() const { return instance_; }
  const RootSet& roots() const { return roots_; }
  const BoundaryProbabilities& boundary() const { return boundary_; }

  cplx eval_pgf(cplx w) const { return pgf_root_form(roots_, instance_, w); }
  /// Taylor jet of X_g about a real base. Accurate about 1; about 0 the
  /// division by the jet of w^g - A(w) loses digits quickly with the order.
  Jet eval_pgf_jet(double base, int order) const;
  double mean_overflow() const;
  double variance_overflow() const;
  double prob_empty() const;
  /// P(X_g = 0..kmax) by FFT inversion of the factorized form.
  QueueDistribution pmf_overflow(std::optional<int> kmax = std::nullopt) const;
  /// Circle used by the FFT inversion: close to 1, away from root moduli.
  double inversion_radius() const;

 private:
  FctlInstance instance_;
  RootSet roots_;
  BoundaryProbabilities boundary_;
};

/// Queue-length distributions at every slot boundary of a cycle.
/// slots[0] is X_0 (start of green), slots[k] the queue after slot k;
/// slots[g] is the overflow queue and slots[c] equals slots[0] in steady state.
struct CycleProfile {
  int g = 0;
  int r = 0;
  std::vector<QueueDistribution> slots;

  int c() const { return g + r; }
  std::vector<double> means() const;
  const QueueDistribution& start_of_green() const { return slots.front(); }
};

struct ProfileOptions {
  /// Mass allowed to fall off the end of every slot distribution.
  double tail_tolerance = 1e-10;
  /// Hard cap on the support of any slot distribution.
  int max_support = 100000;
};

/// Propagates the overflow pmf through r red slots (giving X_0) and then
/// through one full cycle.
CycleProfile cycle_profile(const FctlInstance& instance, const QueueDistribution& overflow,
                           const ProfileOptions& options = {});

/// max_k |q_k - P(X_k = 0)|.
double boundary_mismatch(const BoundaryProbabilities& q, const CycleProfile& profile);

/// Effective green time G: P(G=0) = q_0, P(G=k) = q_k - q_{k-1}, P(G=g) = 1 - q_{g-1}.
QueueDistribution effective_green(const BoundaryProbabilities& q, int g);
/// Same from the slot distributions of a profile.
QueueDistribution effective_green(const CycleProfile& profile);

enum class DelayConvention {
  /// Only the queue at the start of the slot counts (co-arrivals ignored).
  queue_only,
  /// The tagged vehicle takes a uniformly random position among the
  /// vehicles arriving in its slot.
  uniform_position,
};

/// Delay (slots between arrival and departure, arrival slot excluded) of
/// an arrival in slot k ∈ {1..c} that has m vehicles ahead of it at the end
/// of slot k.
int delay_slots(int g, int r, int k, int vehicles_ahead);

/// Distribution of D_[k], k ∈ {1..c}, from the queue at the start of slot k.
QueueDistribution delay_distribution(const FctlInstance& instance, const CycleProfile& profile,
                                     int slot,
                                     DelayConvention convention = DelayConvention::uniform_position);

}  // namespace fctl
