#include "fctl/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fctl/analytic.hpp"
#include "fctl/errors.hpp"
#include "fctl/roots.hpp"

namespace fctl {

namespace {

// Below this distance from 1 the correction factor comes from its jet.
constexpr double kNearOne = 1e-3;
constexpr int kNearOneOrder = 16;

Jet identity(cplx base, int order) { return Jet::variable(base, order); }

double real_or_throw(cplx v, const char* what) {
  if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real()))) {
    std::ostringstream msg;
    msg << what << ": imaginary part " << v.imag() << " is not negligible";
    throw SolverError(msg.str());
  }
  return v.real();
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::right_turn: return "right_turn";
    case Variant::interrupted: return "interrupted";
    case Variant::hesitation: return "hesitation";
    case Variant::dependent_red: return "dependent_red";
    case Variant::custom: return "custom";
  }
  return "custom";
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : {Variant::standard, Variant::right_turn, Variant::interrupted,
                    Variant::hesitation, Variant::dependent_red, Variant::custom}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + name + "'");
}

double GeneralizedInstance::departure_mean() const { return departure.derivative(1.0, 1).real(); }

double GeneralizedInstance::cycle_mean() const { return cycle.derivative(1.0, 1).real(); }

std::string GeneralizedInstance::describe() const {
  std::ostringstream os;
  os << to_string(variant) << " g=" << g;
  if (base) os << " Y=" << base->arrivals().describe();
  switch (variant) {
    case Variant::hesitation: os << " p=" << params.hesitation; break;
    case Variant::dependent_red:
      if (params.red_arrivals) os << " A_r=" << params.red_arrivals->describe();
      break;
    case Variant::interrupted:
      os << " layouts=" << params.layouts.size();
      break;
    default:
      if (base) os << " r=" << base->r();
  }
  return os.str();
}

GeneralizedInstance build_variant(const FctlInstance& base, const VariantParams& params) {
  const ArrivalModel y = base.arrivals();
  const double radius = y.radius();
  GeneralizedInstance gi;
  gi.variant = params.variant;
  gi.base = base;
  gi.params = params;
  gi.g = base.g();

  auto minus_departure = [](SeriesFunction b) {
    return SeriesFunction(
        [b](cplx z, int order) { return identity(z, order) - b.taylor(z, order); }, b.radius());
  };

  switch (params.variant) {
    case Variant::standard:
    case Variant::custom:
    case Variant::right_turn: {
      gi.departure = as_series(y);
      gi.cycle = base.cycle_series();
      if (params.variant == Variant::right_turn) {
        const double y0 = y.probability(0);
        gi.xi = SeriesFunction([y0](cplx z, int order) { return (identity(z, order) - 1.0) * y0; },
                               kInfinity);
      } else {
        gi.xi = minus_departure(gi.departure);
      }
      break;
    }
    case Variant::interrupted: {
      if (params.layouts.empty()) throw std::invalid_argument("interrupted: no cycle layouts given");
      double total = 0.0;
      int max_green = 0;
      for (const auto& l : params.layouts) {
        if (l.green < 1 || l.red < 0 || !(l.probability >= 0.0)) {
          throw std::invalid_argument("interrupted: layouts need green >= 1, red >= 0, p >= 0");
        }
        total += l.probability;
        max_green = std::max(max_green, l.green);
      }
      if (std::abs(total - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "interrupted: layout probabilities sum to " << total << ", not 1";
        throw std::invalid_argument(msg.str());
      }
      std::vector<CycleLayout> layouts = params.layouts;
      for (auto& l : layouts) l.probability /= total;
      gi.params.layouts = layouts;
      gi.g = max_green;
      gi.departure = as_series(y);
      gi.cycle = SeriesFunction(
          [y, layouts, max_green](cplx z, int order) {
            const Jet yz = y.taylor(z, order);
            const Jet w = identity(z, order);
            Jet sum = Jet::constant(0.0, order);
            for (const auto& l : layouts) {
              sum += pow(yz, l.red + l.green) * pow(w, max_green - l.green) * l.probability;
            }
            return sum;
          },
          radius);
      gi.xi = minus_departure(gi.departure);
      break;
    }
    case Variant::hesitation: {
      const double p = params.hesitation;
      if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("hesitation: p must lie in [0,1)");
      const int g = base.g();
      const int c = base.c();
      auto stay = [p](cplx z, int order) { return identity(z, order) * p + (1.0 - p); };
      gi.departure = SeriesFunction(
          [y, stay](cplx z, int order) { return y.taylor(z, order) * stay(z, order); }, radius);
      gi.cycle = SeriesFunction(
          [y, stay, g, c](cplx z, int order) {
            return pow(y.taylor(z, order), c) * pow(stay(z, order), g);
          },
          radius);
      gi.xi = minus_departure(gi.departure);
      break;
    }
    case Variant::dependent_red: {
      if (!params.red_arrivals) throw std::invalid_argument("dependent_red: red_arrivals missing");
      const CountPgf red = *params.red_arrivals;
      const int g = base.g();
      gi.departure = as_series(y);
      gi.cycle = SeriesFunction(
          [y, red, g](cplx z, int order) { return red.taylor(z, order) * pow(y.taylor(z, order), g); },
          std::min(radius, red.radius()));
      gi.xi = minus_departure(gi.departure);
      break;
    }
  }

  const double b1 = gi.departure_mean();
  const double a1 = gi.cycle_mean();
  if (!(b1 < 1.0)) {
    std::ostringstream msg;
    msg << gi.describe() << ": B'(1) = " << b1 << " must be < 1";
    throw StabilityError(msg.str());
  }
  if (!(a1 < gi.g)) {
    std::ostringstream msg;
    msg << gi.describe() << ": A'(1) = " << a1 << " must be < g = " << gi.g;
    throw StabilityError(msg.str());
  }
  if (!(compute_t0(gi.departure) > 1.0)) {
    throw std::invalid_argument(gi.describe() + ": t0 of B must exceed 1");
  }
  const Jet xi1 = gi.xi.taylor(1.0, 1);
  if (std::abs(xi1[0]) > 1e-12) throw std::invalid_argument(gi.describe() + ": xi(1) must be 0");
  if (std::abs(xi1[1]) < 1e-12) throw std::invalid_argument(gi.describe() + ": xi'(1) must be nonzero");
  return gi;
}

GeneralizedSolution::GeneralizedSolution(GeneralizedInstance instance, ContourOptions options)
    : instance_(std::move(instance)),
      core_(instance_.g, instance_.departure, instance_.cycle, options) {
  const int size_hint = instance_.g + static_cast<int>(std::ceil(2.0 * instance_.cycle_mean()));
  const RootSet roots = find_roots(instance_.g, instance_.cycle, size_hint);
  for (std::size_t l = 1; l < roots.roots.size(); ++l) {
    min_xi_ = std::min(min_xi_, std::abs(instance_.xi(roots.roots[l])));
  }
  if (min_xi_ < 1e-10) {
    std::ostringstream msg;
    msg << instance_.describe() << ": xi vanishes at a root of z^g = A(z) (|xi| = " << min_xi_
        << ")";
    throw std::invalid_argument(msg.str());
  }
  for (int i = 0; i <= 20; ++i) core_.check_log_continuity(i / 20.0);
}

Jet GeneralizedSolution::correction_jet(double base, int order) const {
  const double b1 = instance_.departure_mean();
  const double xi1 = instance_.xi.derivative(1.0, 1).real();
  const double scale = (1.0 - b1) / xi1;
  auto denominator = [this](double at, int n) {
    return identity(at, n) - instance_.departure.taylor(at, n);
  };
  if (base == 1.0) {
    const Jet num = instance_.xi.taylor(1.0, order + 1).shifted();
    return num / denominator(1.0, order + 1).shifted() * scale;
  }
  return instance_.xi.taylor(base, order) / denominator(base, order) * scale;
}

cplx GeneralizedSolution::correction(cplx z) const {
  if (std::abs(z - 1.0) < kNearOne) return correction_jet(1.0, kNearOneOrder).eval_offset(z - 1.0);
  const double b1 = instance_.departure_mean();
  const double xi1 = instance_.xi.derivative(1.0, 1).real();
  return (1.0 - b1) / (z - instance_.departure(z)) * instance_.xi(z) / xi1;
}

cplx GeneralizedSolution::eval_pgf(cplx z) const {
  return std::exp(core_.log_pgf(z, PgfForm::pk2)) * correction(z);
}

Jet GeneralizedSolution::eval_pgf_jet(double base, int order) const {
  return core_.eval_pgf_jet(base, order) * correction_jet(base, order);
}

double GeneralizedSolution::mean() const {
  return real_or_throw(eval_pgf_jet(1.0, 1)[1], "generalized mean");
}

double GeneralizedSolution::variance() const {
  const Jet x = eval_pgf_jet(1.0, 2);
  const double first = real_or_throw(x[1], "generalized X'(1)");
  const double second = 2.0 * real_or_throw(x[2], "generalized X''(1)");
  return second + first - first * first;
}

double GeneralizedSolution::prob_empty() const {
  return real_or_throw(core_.prob_empty() * correction(0.0), "generalized P(X=0)");
}

QueueDistribution GeneralizedSolution::pmf(int kmax) const {
  if (kmax < 0 || kmax > kMaxJetOrder) {
    throw std::invalid_argument("generalized pmf: kmax must lie in [0, kMaxJetOrder]");
  }
  const Jet x = eval_pgf_jet(0.0, kmax);
  std::vector<cplx> coefficients(x.coefficients().begin(), x.coefficients().end());
  return make_distribution(coefficients, kmax);
}

ContourSolution bulk_service(int g, const SeriesFunction& cycle_pgf, ContourOptions options) {
  const SeriesFunction one([](cplx, int order) { return Jet::constant(1.0, order); }, kInfinity);
  return ContourSolution(g, one, cycle_pgf, options);
}

cplx bulk_service_pgf(int g, const SeriesFunction& cycle_pgf, cplx w) {
  return bulk_service(g, cycle_pgf).eval_pgf(w, PgfForm::pk2);
}

double bulk_service_mean(int g, const SeriesFunction& cycle_pgf) {
  return bulk_service(g, cycle_pgf).mean_overflow();
}

}  // namespace fctl
