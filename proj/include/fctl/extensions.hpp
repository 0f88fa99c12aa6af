#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "fctl/contour.hpp"
#include "fctl/distribution.hpp"
#include "fctl/jet.hpp"
#include "fctl/pgf.hpp"

namespace fctl {

enum class Variant { standard, right_turn, interrupted, hesitation, dependent_red, custom };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

/// One (red, green) cycle layout of the interrupted-flow variant.
struct CycleLayout {
  int red = 0;
  int green = 0;
  double probability = 0.0;
};

struct VariantParams {
  Variant variant = Variant::standard;
  /// interrupted: joint pmf of (red, green); the maximum green is G.
  std::vector<CycleLayout> layouts;
  /// hesitation: probability that the head of the queue does not depart.
  double hesitation = 0.0;
  /// dependent_red: arrivals over the whole red period.
  std::optional<CountPgf> red_arrivals;
};

/// X(z) = Σ_k x_k z^k B(z)^{g-1-k} ξ(z) / (z^g - A(z)) with X(1) = 1.
struct GeneralizedInstance {
  Variant variant = Variant::custom;
  int g = 0;
  SeriesFunction departure;  // B
  SeriesFunction cycle;      // A
  SeriesFunction xi;         // ξ
  /// The standard instance the variant was built from (arrivals Y, r).
  std::optional<FctlInstance> base;
  VariantParams params;

  double departure_mean() const;  // B'(1)
  double cycle_mean() const;      // A'(1)
  std::string describe() const;
};

/// B, A and ξ of each variant. For `interrupted`, g and r of `base` are
/// replaced by the layouts. Checks B'(1) < 1, A'(1) < g, t0(B) > 1 and
/// ξ(1) = 0 ≠ ξ'(1); throws std::invalid_argument (StabilityError for the
/// load conditions) naming the failed condition.
GeneralizedInstance build_variant(const FctlInstance& base, const VariantParams& params);

/// Evaluator of X(z) through the logarithmic-kernel integral with B in
/// place of Y, multiplied by (1 - B'(1))/(z - B(z)) · ξ(z)/ξ'(1).
class GeneralizedSolution {
 public:
  /// Also checks ξ(z_l) ≠ 0 at the roots of z^g = A(z) in the unit disk and
  /// scans [0,1] for branch crossings of the logarithm.
  explicit GeneralizedSolution(GeneralizedInstance instance, ContourOptions options = {});

  const GeneralizedInstance& instance() const { return instance_; }
  const ContourSolution& core() const { return core_; }
  /// min |ξ(z_l)| over the non-unit roots.
  double min_xi_at_roots() const { return min_xi_; }

  cplx eval_pgf(cplx z) const;
  Jet eval_pgf_jet(double base, int order) const;
  double mean() const;
  double variance() const;
  double prob_empty() const;
  /// P(X = 0..kmax) from the jet at 0 (kmax <= kMaxJetOrder).
  QueueDistribution pmf(int kmax = 40) const;

 private:
  cplx correction(cplx z) const;
  Jet correction_jet(double base, int order) const;

  GeneralizedInstance instance_;
  ContourSolution core_;
  double min_xi_ = kInfinity;
};

/// X_b(w) = exp(∮ ln((w - z)/(1 - z)) (z^g - A(z))'/(z^g - A(z)) dz/2πi),
/// the stationary queue of X_b = max(X_b + A - g, 0).
cplx bulk_service_pgf(int g, const SeriesFunction& cycle_pgf, cplx w);
double bulk_service_mean(int g, const SeriesFunction& cycle_pgf);
/// The bulk-service queue as a contour solution (departure PGF ≡ 1).
ContourSolution bulk_service(int g, const SeriesFunction& cycle_pgf, ContourOptions options = {});

}  // namespace fctl
