#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

namespace fctl {

/// Finite pmf p_0..p_K plus the probability mass not represented, P(X > K).
struct QueueDistribution {
  std::vector<double> pmf;
  double tail = 0.0;
  /// Notes from the producer (clamped entries, truncation, aliasing bound).
  std::vector<std::string> diagnostics;

  int max_index() const { return static_cast<int>(pmf.size()) - 1; }
  double at(int k) const;
  double total() const;
  double mean() const;
  double variance() const;
  /// P(X > k), tail included.
  double survival(int k) const;
};

/// Coefficients 0..points-1 of a power series f(w) = Σ p_k w^k from samples
/// on the circle |w| = rho (discrete Fourier inversion).
std::vector<std::complex<double>> invert_pgf_fft(
    const std::function<std::complex<double>(std::complex<double>)>& pgf, double rho, int points);

/// Real parts of `coefficients` up to kmax, with negative entries clamped
/// to zero and recorded in diagnostics; tail = 1 - Σ pmf.
QueueDistribution make_distribution(const std::vector<std::complex<double>>& coefficients,
                                    int kmax);

/// Smallest k with Σ_{j<=k} coefficients > 1 - mass_tol, or the last index.
int default_kmax(const std::vector<std::complex<double>>& coefficients, double mass_tol = 1e-9);

/// ½ Σ |p_k - q_k| including both tails as an extra atom.
double total_variation(const QueueDistribution& a, const QueueDistribution& b);

/// Discrete convolution truncated so that the mass dropped off the end is
/// below `drop_tol`; dropped mass is added to the tail.
QueueDistribution convolve(const QueueDistribution& a, const std::vector<double>& b,
                           double drop_tol = 1e-14);

}  // namespace fctl
