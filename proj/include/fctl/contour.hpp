#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fctl/analytic.hpp"
#include "fctl/distribution.hpp"
#include "fctl/jet.hpp"
#include "fctl/pgf.hpp"

namespace fctl {

/// pk1: full-disk form with ln(1 - A(z)/z^g), valid for |w| < 1+ε.
/// pk2: logarithmic-kernel form, valid near [0,1]; kept for cross-checks.
enum class PgfForm { pk1, pk2 };

struct ContourOptions {
  /// Fraction of the admissible band (1, min{t0,R0,R}) used for the circle.
  double eta = 0.5;
  double tolerance = 1e-12;
  int initial_nodes = 256;
  int max_nodes = 1 << 20;
  /// Samples for numerical inversion of the PGF.
  int fft_points = 4096;
  /// Probabilities P(X=k) with k up to this come from the Taylor jet at 0.
  int jet_pmf_limit = 24;
  /// Imaginary parts of real outputs above this are treated as errors.
  double imaginary_tolerance = 1e-9;
};

/// Stationary overflow queue of an FCTL-type queue represented by Pollaczek
/// contour integrals over |z| = 1+ε. No roots are computed.
///
/// Built either from an FctlInstance (departure PGF Y, cycle PGF Y^c) or
/// from a general pair (B, A) as used by the generalized queues, in which
/// case every quantity refers to the FCTL-like factor with B in place of Y.
class ContourSolution {
 public:
  explicit ContourSolution(const FctlInstance& instance, ContourOptions options = {});
  ContourSolution(int g, SeriesFunction departure_pgf, SeriesFunction cycle_pgf,
                  ContourOptions options = {});

  /// Quantities at one quadrature node, all evaluated once and cached.
  struct Node {
    cplx z;
    cplx b;          // B(z)
    cplx db;         // B'(z)
    cplx d_log_d;    // (z^g - A(z))' / (z^g - A(z))
    cplx log_ratio;  // ln(1 - A(z)/z^g), principal
    cplx pk1_weight; // (B'(z)z - B(z))/(z - B(z)) · log_ratio
  };
  using NodeIntegrand = std::function<void(const Node&, std::span<cplx>)>;

  int g() const { return g_; }
  double t0() const { return t0_; }
  double r0() const { return r0_; }
  const ContourSpec& spec() const { return spec_; }
  const ContourOptions& options() const { return options_; }
  const SeriesFunction& departure_pgf() const { return departure_; }
  const SeriesFunction& cycle_pgf() const { return cycle_; }

  /// (1/2πi)∮ f(node) dz over the circle, refined to spec().tolerance.
  QuadratureResult integrate(std::size_t dim, const NodeIntegrand& f) const;
  cplx integrate(const std::function<cplx(const Node&)>& f) const;
  /// Nodes of the N-point rule, N a power-of-two multiple of the initial count.
  std::shared_ptr<const std::vector<Node>> nodes(int count) const;

  /// ln X(w).
  cplx log_pgf(cplx w, PgfForm form = PgfForm::pk1) const;
  /// X(w). Throws std::domain_error for |w| >= radius.
  cplx eval_pgf(cplx w, PgfForm form = PgfForm::pk1) const;

  /// Jet of f = ln X about a real base in the validity set of the
  /// logarithmic form (a neighbourhood of [0,1]).
  Jet log_pgf_jet(double base, int order) const;
  /// Jet of X = exp(f) about `base`.
  Jet eval_pgf_jet(double base, int order) const;

  /// E[X] from the direct first-moment integral.
  double mean_overflow() const;
  /// Var(X) from the direct second-moment integral.
  double variance_overflow() const;
  /// Var(X) = h2(1) + h1(1) - h1(1)^2 from the derivative ladder.
  double variance_from_jet() const;
  /// P(X = 0) = exp(f(0)) from its closed-form integrand.
  double prob_empty() const;
  /// P(X = 0..kmax): Taylor jet at 0 for small k, FFT inversion beyond.
  /// Without kmax, the smallest k with cumulative mass > 1 - 1e-9.
  QueueDistribution pmf_overflow(std::optional<int> kmax = std::nullopt) const;

  /// (1/2πi)∮ (z^g - A(z))'/(z^g - A(z)) dz: zeros inside the circle.
  double winding_number() const;
  /// Radius used for FFT inversion.
  double inversion_radius() const;

  /// Throws ContourValidityError if arg of the logarithmic kernel
  /// (wB(z) - zB(w))/(B(z) - z) jumps by more than π between adjacent nodes,
  /// i.e. w lies outside the validity set of the logarithmic form.
  void check_log_continuity(cplx w) const;

 private:
  struct Cache;

  void validate_contour() const;
  Node make_node(cplx z) const;
  double real_checked(cplx value, const char* what) const;

  int g_;
  SeriesFunction departure_;
  SeriesFunction cycle_;
  ContourOptions options_;
  double t0_;
  double r0_;
  ContourSpec spec_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace fctl
