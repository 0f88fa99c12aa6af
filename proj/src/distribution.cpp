#include "fctl/distribution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fctl {

using cplx = std::complex<double>;

double QueueDistribution::at(int k) const {
  return k >= 0 && k < static_cast<int>(pmf.size()) ? pmf[k] : 0.0;
}

double QueueDistribution::total() const {
  return std::accumulate(pmf.begin(), pmf.end(), 0.0) + tail;
}

double QueueDistribution::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) m += k * pmf[k];
  return m;
}

double QueueDistribution::variance() const {
  double m = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    m += k * pmf[k];
    m2 += double(k) * double(k) * pmf[k];
  }
  return m2 - m * m;
}

double QueueDistribution::survival(int k) const {
  double s = tail;
  for (int j = static_cast<int>(pmf.size()) - 1; j > k; --j) s += pmf[j];
  return s;
}

std::vector<cplx> invert_pgf_fft(const std::function<cplx(cplx)>& pgf, double rho, int points) {
  if (points < 2) throw std::invalid_argument("invert_pgf_fft: need at least two points");
  if (!(rho > 0.0)) throw std::invalid_argument("invert_pgf_fft: rho must be positive");
  std::vector<cplx> samples(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    samples[j] = pgf(std::polar(rho, 2.0 * M_PI * j / points));
  }
  std::vector<cplx> spectrum(samples.size());
  fftw_plan plan = fftw_plan_dft_1d(points, reinterpret_cast<fftw_complex*>(samples.data()),
                                    reinterpret_cast<fftw_complex*>(spectrum.data()),
                                    FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  double scale = 1.0 / points;
  for (int k = 0; k < points; ++k) {
    spectrum[k] *= scale;
    scale /= rho;
  }
  return spectrum;
}

QueueDistribution make_distribution(const std::vector<cplx>& coefficients, int kmax) {
  QueueDistribution out;
  kmax = std::min(kmax, static_cast<int>(coefficients.size()) - 1);
  out.pmf.resize(static_cast<std::size_t>(kmax) + 1);
  int clamped = 0;
  double most_negative = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    double p = coefficients[k].real();
    if (p < 0.0) {
      ++clamped;
      most_negative = std::min(most_negative, p);
      p = 0.0;
    }
    out.pmf[k] = p;
  }
  if (clamped > 0) {
    std::ostringstream msg;
    msg << "clamped " << clamped << " negative entries (most negative " << most_negative << ")";
    out.diagnostics.push_back(msg.str());
  }
  out.tail = std::max(0.0, 1.0 - std::accumulate(out.pmf.begin(), out.pmf.end(), 0.0));
  return out;
}

int default_kmax(const std::vector<cplx>& coefficients, double mass_tol) {
  double cumulative = 0.0;
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    cumulative += coefficients[k].real();
    if (cumulative > 1.0 - mass_tol) return static_cast<int>(k);
  }
  return static_cast<int>(coefficients.size()) - 1;
}

double total_variation(const QueueDistribution& a, const QueueDistribution& b) {
  const int n = std::max(a.max_index(), b.max_index());
  double tv = 0.0;
  for (int k = 0; k <= n; ++k) tv += std::abs(a.at(k) - b.at(k));
  tv += std::abs(a.tail - b.tail);
  return 0.5 * tv;
}

QueueDistribution convolve(const QueueDistribution& a, const std::vector<double>& b,
                           double drop_tol) {
  QueueDistribution out;
  out.tail = a.tail;
  if (a.pmf.empty() || b.empty()) return out;
  std::vector<double> result(a.pmf.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.pmf.size(); ++i) {
    if (a.pmf[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) result[i + j] += a.pmf[i] * b[j];
  }
  // Mass of `b` beyond its support also leaves the represented range.
  const double b_mass = std::accumulate(b.begin(), b.end(), 0.0);
  out.tail += std::max(0.0, 1.0 - b_mass) * std::accumulate(a.pmf.begin(), a.pmf.end(), 0.0);
  double dropped = 0.0;
  while (result.size() > 1 && dropped + result.back() < drop_tol) {
    dropped += result.back();
    result.pop_back();
  }
  out.tail += dropped;
  out.pmf = std::move(result);
  return out;
}

}  // namespace fctl
