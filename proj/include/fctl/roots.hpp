#pragma once

#include <complex>
#include <string>
#include <vector>

#include "fctl/jet.hpp"
#include "fctl/pgf.hpp"

namespace fctl {

/// Truncations leaving more probability mass than this are not certified.
inline constexpr double kTruncationTailLimit = 1e-12;

struct RootOptions {
  /// Taylor truncation order n of A(z); 0 selects max(100, 50 + max(c, g)).
  int truncation_order = 0;
  int max_newton_iterations = 50;
  double newton_tolerance = 1e-13;
  /// Refined roots closer than this are the same root.
  double merge_tolerance = 1e-8;
  /// Polynomial roots with modulus up to this seed the Newton stage.
  double seed_radius = 1.0 + 1e-6;
};

/// Outcome of the three certification checks.
struct CertificationReport {
  /// (a) zeros of z^g - A(z) inside the contour, by the argument principle.
  int winding_count = 0;
  bool count_ok = false;
  /// (b) |D_n(z_j)| <= Σ_{k>n} a_k (+ residual and rounding slack).
  double tail_mass = 0.0;
  double worst_bound_ratio = 0.0;
  bool bound_ok = false;
  /// (c) the truncation is informative: Σ_{k>n} a_k <= kTruncationTailLimit.
  bool truncation_ok = false;
  /// Largest move of a polynomial seed during refinement (diagnostic only;
  /// seeds of small roots are inaccurate for large g).
  double max_seed_displacement = 0.0;
  bool certified = false;
  std::vector<std::string> diagnostics;
};

/// The g roots of z^g = A(z) in the closed unit disk. roots[0] == 1 exactly;
/// the rest are sorted by argument in [0, 2π), then modulus.
struct RootSet {
  int g = 0;
  std::vector<cplx> roots;
  /// |z^g - A(z)| for the exact A.
  std::vector<double> residuals;
  /// |z^g - A_n(z)| for the truncated A.
  std::vector<double> truncated_residuals;
  int truncation_order = 0;
  bool fallback_used = false;
  double max_seed_displacement = 0.0;
  CertificationReport report;

  bool certified() const { return report.certified; }
  double max_residual() const;
};

int default_truncation_order(int c, int g);

/// Roots via the truncated Taylor polynomial: balanced companion-matrix
/// eigenvalues, Newton polishing on the exact equation, deduplication, a
/// fixed-point search for anything missed, and certification. Throws
/// CertificationError when the number of roots found differs from g.
RootSet find_roots(const FctlInstance& instance, const RootOptions& options = {});

/// Same for a general cycle PGF A given as a series (generalized queues).
/// `size_hint` plays the role of c in the default truncation order.
RootSet find_roots(int g, const SeriesFunction& cycle_pgf, int size_hint,
                   const RootOptions& options = {});

/// Closed form for Poisson arrivals:
/// z_k = -(g/(cλ)) W(-(cλ/g) e^{2πik/g} e^{-cλ/g}), k = 1..g-1.
RootSet lambert_roots(const FctlInstance& instance);

/// Re-runs the certification checks for `roots` against `instance`.
CertificationReport certify(const RootSet& roots, const FctlInstance& instance);

/// Σ_{k>n} P(A = k) for A = Y^c, summed directly where the family allows.
double cycle_tail_mass(const FctlInstance& instance, int n);

/// Eigenvalues of the polynomial Σ coefficients[k] z^k (highest nonzero
/// coefficient last) from a balanced companion matrix.
std::vector<cplx> polynomial_roots(const std::vector<double>& coefficients);

}  // namespace fctl
