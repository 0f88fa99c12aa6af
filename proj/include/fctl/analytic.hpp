#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "fctl/jet.hpp"
#include "fctl/pgf.hpp"

namespace fctl {

/// Principal branch W_0 of the Lambert W function, W(x) e^{W(x)} = x.
/// Real for real x >= -1/e.
cplx lambert_w(cplx x);

/// t0 = sup{t in (0,R) : B'(t) t - B(t) <= 0}. The left side is strictly
/// increasing once B has mass on {2,3,...}, so the crossing is bisected.
/// Returns R (+inf for entire functions) when no crossing exists, which is
/// always the case for linear PGFs.
double compute_t0(const SeriesFunction& pgf);
double compute_t0(const CountPgf& pgf);

/// Smallest real root R0 > 1 of z^g = A(z). z^g - A(z) is positive on
/// (1, R0) and negative beyond, so an expanding bracket followed by
/// bisection finds it. Returns +inf when no crossing occurs before
/// min(R, kContourRadiusCap).
double compute_r0(int g, const SeriesFunction& cycle_pgf);
double compute_r0(const FctlInstance& instance);

/// Circles never need to go further out than this.
inline constexpr double kContourRadiusCap = 10.0;

struct ContourSpec {
  double radius = 1.0;
  /// Initial node count; doubled until converged.
  int nodes = 256;
  /// min{t0, R0, R} - 1 after capping.
  double epsilon_budget = 0.0;
  double tolerance = 1e-12;
  int max_nodes = 1 << 20;
};

/// Places the circle a fraction `eta` of the way into the admissible band
/// (1, min{t0, R0, R}). Infinite bounds are capped at
/// min(R·(1-1e-9), kContourRadiusCap).
ContourSpec choose_contour(double t0, double r0, double analytic_radius = kInfinity,
                           double eta = 0.5);

/// Pairwise (cascade) summation; fixed order, so results are bit-stable.
cplx pairwise_sum(std::span<const cplx> values);

/// Single N-point trapezoidal estimate of (1/2πi)∮_{|z|=radius} f(z) dz.
cplx trapezoid_circle(const std::function<cplx(cplx)>& f, double radius, int nodes);

struct QuadratureResult {
  std::vector<cplx> values;
  int nodes = 0;
  /// max-norm difference between the last two refinement levels.
  double change = 0.0;
};

using VectorIntegrand = std::function<void(cplx z, std::span<cplx> out)>;

/// (1/2πi)∮ f(z) dz for a vector-valued f by the trapezoidal rule on the
/// circle, doubling the node count until successive estimates differ by
/// less than spec.tolerance (max-norm). Throws ConvergenceError past
/// spec.max_nodes.
QuadratureResult contour_quadrature(std::size_t dim, const VectorIntegrand& f,
                                    const ContourSpec& spec);
cplx contour_quadrature(const std::function<cplx(cplx)>& f, const ContourSpec& spec);

}  // namespace fctl
