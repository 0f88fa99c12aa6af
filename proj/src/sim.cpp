#include "fctl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "fctl/errors.hpp"

namespace fctl {

namespace {

// ---------------------------------------------------------------------------
// Random numbers: one xoshiro256** stream per cycle, keyed by splitmix64 on
// (seed, cycle index), so any cycle can be regenerated independently.

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CycleRng {
 public:
  CycleRng(std::uint64_t seed, std::uint64_t cycle) {
    std::uint64_t key = seed;
    const std::uint64_t mixed_seed = splitmix64(key);
    std::uint64_t sm = mixed_seed ^ (cycle * 0xD1B54A32D192ED03ULL);
    for (auto& word : s_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

/// Inverse-CDF sampler over a finite table (tail beyond 1e-17 folded into
/// the last entry).
class TableSampler {
 public:
  TableSampler() = default;
  explicit TableSampler(std::vector<double> pmf) {
    cdf_.resize(pmf.size());
    double run = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      run += pmf[k];
      cdf_[k] = run;
    }
    if (cdf_.empty()) cdf_.push_back(1.0);
    cdf_.back() = 1.0;
  }

  static TableSampler of(const CountPgf& pgf) {
    const int n = std::max(1, pgf.support_bound(1e-17));
    return TableSampler(pgf.pmf(n));
  }

  int draw(CycleRng& rng) const {
    const double u = rng.uniform();
    int k = 0;
    while (u >= cdf_[k]) ++k;
    return k;
  }

 private:
  std::vector<double> cdf_;
};

// ---------------------------------------------------------------------------
// Statistics.

/// Batch means of one scalar.
struct ScalarBatches {
  long double total = 0.0L;
  long double total_sq = 0.0L;
  std::uint64_t count = 0;
  long double batch = 0.0L;
  long double batch_sq = 0.0L;
  std::uint64_t batch_count = 0;
  double mean_s1 = 0.0, mean_s2 = 0.0;
  double var_s1 = 0.0, var_s2 = 0.0;
  int batches = 0;

  void add(double x) {
    total += x;
    total_sq += static_cast<long double>(x) * x;
    ++count;
    batch += x;
    batch_sq += static_cast<long double>(x) * x;
    ++batch_count;
  }

  void finish_batch() {
    if (batch_count == 0) return;
    const double n = static_cast<double>(batch_count);
    const double m = static_cast<double>(batch / n);
    const double v = batch_count > 1 ? static_cast<double>((batch_sq - batch * batch / n) / (n - 1)) : 0.0;
    mean_s1 += m;
    mean_s2 += m * m;
    var_s1 += v;
    var_s2 += v * v;
    ++batches;
    batch = batch_sq = 0.0L;
    batch_count = 0;
  }

  double mean() const { return count ? static_cast<double>(total / count) : 0.0; }
  double variance() const {
    if (count < 2) return 0.0;
    const long double n = count;
    return static_cast<double>((total_sq - total * total / n) / (n - 1));
  }
  static double se(double s1, double s2, int nb) {
    if (nb < 2) return 0.0;
    const double var = std::max(0.0, (s2 - s1 * s1 / nb) / (nb - 1));
    return std::sqrt(var / nb);
  }
  double mean_se() const { return se(mean_s1, mean_s2, batches); }
  double variance_se() const { return se(var_s1, var_s2, batches); }
};

/// Counts per bin with batch-means standard errors of the bin frequencies.
class HistogramBatches {
 public:
  void add(int k, std::uint64_t n = 1) {
    const auto idx = static_cast<std::size_t>(k);
    if (idx >= total_.size()) {
      total_.resize(idx + 1, 0);
      batch_.resize(idx + 1, 0);
      s1_.resize(idx + 1, 0.0);
      s2_.resize(idx + 1, 0.0);
    }
    total_[idx] += n;
    batch_[idx] += n;
    total_den_ += n;
    batch_den_ += n;
  }

  void finish_batch() {
    if (batch_den_ == 0) return;
    const double den = static_cast<double>(batch_den_);
    for (std::size_t k = 0; k < batch_.size(); ++k) {
      const double f = static_cast<double>(batch_[k]) / den;
      s1_[k] += f;
      s2_[k] += f * f;
      batch_[k] = 0;
    }
    batch_den_ = 0;
    ++batches_;
  }

  EmpiricalPmf result() const {
    EmpiricalPmf out;
    out.samples = total_den_;
    out.pmf.resize(total_.size(), 0.0);
    out.se.resize(total_.size(), 0.0);
    if (total_den_ == 0) return out;
    const double n = static_cast<double>(total_den_);
    for (std::size_t k = 0; k < total_.size(); ++k) {
      const double p = static_cast<double>(total_[k]) / n;
      out.pmf[k] = p;
      const double binomial = std::sqrt(p * (1.0 - p) / n);
      out.se[k] = std::max(ScalarBatches::se(s1_[k], s2_[k], batches_), binomial);
    }
    return out;
  }

 private:
  std::vector<std::uint64_t> total_, batch_;
  std::vector<double> s1_, s2_;
  std::uint64_t total_den_ = 0, batch_den_ = 0;
  int batches_ = 0;
};

// ---------------------------------------------------------------------------
// The slot-level engine.

enum class GreenRule { standard, right_turn, hesitation };

struct Model {
  std::string description;
  GreenRule rule = GreenRule::standard;
  double hesitation = 0.0;
  TableSampler per_slot;
  /// Fixed layout (all but interrupted).
  int g = 0;
  int r = 0;
  /// dependent_red: arrivals of the whole red period in one draw.
  bool joint_red = false;
  TableSampler red_total;
  /// interrupted: (red, green) drawn per cycle; red precedes green.
  std::vector<CycleLayout> layouts;
  TableSampler layout_draw;

  bool fixed_layout() const { return layouts.empty(); }
};

/// Vehicles that arrived in the same slot.
struct Group {
  std::int64_t slot;  // absolute slot index
  int label;          // slot within the cycle, 1..c (0 = not tracked)
  std::uint64_t count;
  bool recorded;
  bool met_empty_green;
};

class Engine {
 public:
  Engine(const Model& model, const SimConfig& config) : m_(model), cfg_(config) {
    if (m_.fixed_layout()) {
      const int c = m_.g + m_.r;
      delays_.resize(static_cast<std::size_t>(c));
      slot_stats_.resize(static_cast<std::size_t>(c) + 1);
    }
  }

  SimReport run();

 private:
  void arrive(std::uint64_t a, int label, bool measured, bool empty_green) {
    if (a == 0) return;
    queue_.push_back(Group{now_, label, a, measured, empty_green});
    n_ += a;
    if (measured) arrivals_ += a;
  }

  /// The head of the queue leaves at the end of the current slot.
  void depart_one() {
    Group& head = queue_.front();
    const std::int64_t delay = now_ - head.slot;
    if (head.recorded) {
      --recorded_in_queue_;
      account(head, delay, 1);
    }
    --head.count;
    --n_;
    if (head.count == 0) queue_.pop_front();
  }

  void account(const Group& group, std::int64_t delay, std::uint64_t count) {
    if (delay == 0) {
      passed_ += count;
    } else {
      delayed_ += count;
      if (group.met_empty_green) empty_green_delays_ += count;
    }
    if (group.label > 0 && !delays_.empty()) {
      delays_[static_cast<std::size_t>(group.label - 1)].add(static_cast<int>(delay), count);
    }
  }

  /// Vehicles passing straight through in the slot they arrive.
  void pass_through(std::uint64_t a, int label, bool measured) {
    if (a == 0 || !measured) return;
    arrivals_ += a;
    account(Group{now_, label, a, true, true}, 0, a);
  }

  void green_slot(CycleRng& rng, int label, bool measured) {
    const std::uint64_t a = static_cast<std::uint64_t>(m_.per_slot.draw(rng));
    const bool empty = n_ == 0;
    switch (m_.rule) {
      case GreenRule::standard:
        if (empty) {
          pass_through(a, label, measured);
        } else {
          depart_one();
          track(a, label, measured, false);
        }
        break;
      case GreenRule::hesitation:
        if (empty) {
          pass_through(a, label, measured);
        } else {
          if (rng.uniform() >= m_.hesitation) depart_one();
          track(a, label, measured, false);
        }
        break;
      case GreenRule::right_turn:
        track(a, label, measured, empty);
        if (n_ > 0) depart_one();
        break;
    }
  }

  void track(std::uint64_t a, int label, bool measured, bool empty_green) {
    if (measured) recorded_in_queue_ += a;
    arrive(a, label, measured, empty_green);
  }

  void red_slot(CycleRng& rng, int label, bool measured, std::uint64_t forced = 0,
                bool use_forced = false) {
    const std::uint64_t a =
        use_forced ? forced : static_cast<std::uint64_t>(m_.per_slot.draw(rng));
    track(a, label, measured, false);
  }

  void finish_batch();

  const Model& m_;
  const SimConfig& cfg_;
  std::deque<Group> queue_;
  std::uint64_t n_ = 0;
  std::int64_t now_ = 0;
  std::uint64_t recorded_in_queue_ = 0;
  std::uint64_t arrivals_ = 0, passed_ = 0, delayed_ = 0, empty_green_delays_ = 0;

  ScalarBatches overflow_;
  HistogramBatches overflow_pmf_, start_pmf_, green_pmf_;
  std::vector<ScalarBatches> slot_stats_;
  std::vector<HistogramBatches> delays_;
};

void Engine::finish_batch() {
  overflow_.finish_batch();
  overflow_pmf_.finish_batch();
  start_pmf_.finish_batch();
  green_pmf_.finish_batch();
  for (auto& s : slot_stats_) s.finish_batch();
  for (auto& d : delays_) d.finish_batch();
}

SimReport Engine::run() {
  const std::int64_t total = cfg_.warmup + cfg_.cycles;
  const std::int64_t batches = std::max<std::int64_t>(1, std::min<std::int64_t>(cfg_.batches, cfg_.cycles));
  const std::int64_t batch_len = (cfg_.cycles + batches - 1) / batches;
  std::vector<std::uint64_t> trace;
  constexpr std::int64_t kMaxDrainCycles = 10000000;

  for (std::int64_t cycle = 0;; ++cycle) {
    const bool measured = cycle >= cfg_.warmup && cycle < total;
    if (cycle >= total && recorded_in_queue_ == 0) break;
    if (cycle >= total + kMaxDrainCycles) {
      throw SolverError("simulation: queue did not drain after the measured cycles");
    }
    CycleRng rng(cfg_.seed, static_cast<std::uint64_t>(cycle));

    int g = m_.g;
    int r = m_.r;
    if (!m_.fixed_layout()) {
      const CycleLayout& l = m_.layouts[static_cast<std::size_t>(m_.layout_draw.draw(rng))];
      g = l.green;
      r = l.red;
    }
    const bool fixed = m_.fixed_layout();
    // Slots are labelled 1..c only when the layout is the same every cycle.
    auto label = [fixed](int k) { return fixed ? k : 0; };

    trace.assign(1, n_);
    if (!fixed) {
      for (int k = 1; k <= r; ++k, ++now_) red_slot(rng, 0, measured);
      trace[0] = n_;
    }
    int first_empty = -1;
    for (int k = 1; k <= g; ++k, ++now_) {
      if (first_empty < 0 && n_ == 0) first_empty = k - 1;
      green_slot(rng, label(k), measured);
      trace.push_back(n_);
    }
    const std::uint64_t overflow = n_;
    if (fixed) {
      std::uint64_t red_total = 0;
      if (m_.joint_red) red_total = static_cast<std::uint64_t>(m_.red_total.draw(rng));
      for (int k = 1; k <= r; ++k, ++now_) {
        red_slot(rng, label(g + k), measured, k == 1 ? red_total : 0, m_.joint_red);
        trace.push_back(n_);
      }
    }

    if (!measured) continue;
    overflow_.add(static_cast<double>(overflow));
    overflow_pmf_.add(static_cast<int>(overflow));
    start_pmf_.add(static_cast<int>(trace[0]));
    green_pmf_.add(first_empty < 0 ? g : first_empty);
    if (fixed) {
      for (std::size_t k = 0; k < trace.size(); ++k) slot_stats_[k].add(static_cast<double>(trace[k]));
    }
    const std::int64_t index = cycle - cfg_.warmup;
    const bool last_of_batch = (index + 1) % batch_len == 0;
    if (last_of_batch && cycle + 1 < total) finish_batch();
  }
  // The final batch also holds the delays of vehicles that left while draining.
  finish_batch();

  SimReport rep;
  rep.description = m_.description;
  rep.cycles = cfg_.cycles;
  rep.warmup = cfg_.warmup;
  rep.seed = cfg_.seed;
  rep.batches = static_cast<int>(batches);
  rep.mean = overflow_.mean();
  rep.mean_se = overflow_.mean_se();
  rep.variance = overflow_.variance();
  rep.variance_se = overflow_.variance_se();
  rep.overflow = overflow_pmf_.result();
  rep.start_of_green = start_pmf_.result();
  rep.effective_green = green_pmf_.result();
  for (const auto& s : slot_stats_) {
    rep.slot_means.push_back(s.mean());
    rep.slot_means_se.push_back(s.mean_se());
  }
  for (const auto& d : delays_) rep.delays.push_back(d.result());
  rep.arrivals = arrivals_;
  rep.arrivals_delayed = delayed_;
  rep.arrivals_passed = passed_;
  rep.empty_green_delays = empty_green_delays_;
  if (passed_ + delayed_ != arrivals_) {
    std::ostringstream msg;
    msg << "arrival bookkeeping mismatch: " << passed_ << " passed + " << delayed_
        << " delayed != " << arrivals_;
    rep.diagnostics.push_back(msg.str());
  }
  return rep;
}

void check_config(const SimConfig& config) {
  if (config.cycles < 1) throw std::invalid_argument("simulate: cycles must be >= 1");
  if (config.warmup < 0) throw std::invalid_argument("simulate: warmup must be >= 0");
  if (config.batches < 1) throw std::invalid_argument("simulate: batches must be >= 1");
}

}  // namespace

double EmpiricalPmf::se_at(int k) const {
  return k >= 0 && k < static_cast<int>(se.size()) ? se[k] : 0.0;
}

double EmpiricalPmf::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) m += static_cast<double>(k) * pmf[k];
  return m;
}

SimReport simulate(const FctlInstance& instance, const SimConfig& config) {
  check_config(config);
  Model m;
  m.description = instance.describe();
  m.per_slot = TableSampler::of(instance.arrivals());
  m.g = instance.g();
  m.r = instance.r();
  return Engine(m, config).run();
}

SimReport simulate(const GeneralizedInstance& instance, const SimConfig& config) {
  check_config(config);
  if (!instance.base) throw std::invalid_argument("simulate: variant has no base instance");
  const FctlInstance& base = *instance.base;
  Model m;
  m.description = instance.describe();
  m.per_slot = TableSampler::of(base.arrivals());
  m.g = base.g();
  m.r = base.r();
  switch (instance.variant) {
    case Variant::standard: break;
    case Variant::right_turn: m.rule = GreenRule::right_turn; break;
    case Variant::hesitation:
      m.rule = GreenRule::hesitation;
      m.hesitation = instance.params.hesitation;
      break;
    case Variant::dependent_red:
      if (!instance.params.red_arrivals) throw std::invalid_argument("simulate: red_arrivals missing");
      m.joint_red = true;
      m.red_total = TableSampler::of(*instance.params.red_arrivals);
      break;
    case Variant::interrupted: {
      m.layouts = instance.params.layouts;
      std::vector<double> weights;
      for (const auto& l : m.layouts) weights.push_back(l.probability);
      m.layout_draw = TableSampler(weights);
      break;
    }
    case Variant::custom:
      throw std::invalid_argument("simulate: custom instances have no slot-level dynamics");
  }
  return Engine(m, config).run();
}

// ---------------------------------------------------------------------------
// Exact oracle.

namespace {

/// Red slot on {0..K}: X + Y, mass beyond K dropped.
void red_step(std::vector<double>& p, const std::vector<double>& y, std::vector<double>& scratch) {
  const std::size_t size = p.size();
  scratch.assign(size, 0.0);
  for (std::size_t n = 0; n < size; ++n) {
    const double pn = p[n];
    if (pn == 0.0) continue;
    const std::size_t top = std::min(y.size(), size - n);
    for (std::size_t j = 0; j < top; ++j) scratch[n + j] += pn * y[j];
  }
  p.swap(scratch);
}

/// Green slot: 0 stays 0 (arrivals pass), n > 0 becomes n - 1 + Y.
void green_step(std::vector<double>& p, const std::vector<double>& y, std::vector<double>& scratch) {
  const std::size_t size = p.size();
  scratch.assign(size, 0.0);
  scratch[0] = p[0];
  for (std::size_t n = 1; n < size; ++n) {
    const double pn = p[n];
    if (pn == 0.0) continue;
    const std::size_t top = std::min(y.size(), size - (n - 1));
    for (std::size_t j = 0; j < top; ++j) scratch[n - 1 + j] += pn * y[j];
  }
  p.swap(scratch);
}

/// Overflow to overflow: r red slots, then g green slots.
void cycle_step(std::vector<double>& p, const FctlInstance& in, const std::vector<double>& y,
                std::vector<double>& scratch) {
  for (int k = 0; k < in.r(); ++k) red_step(p, y, scratch);
  for (int k = 0; k < in.g(); ++k) green_step(p, y, scratch);
}

double sum(const std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

QueueDistribution to_distribution(const std::vector<double>& p) {
  QueueDistribution d;
  d.pmf = p;
  d.tail = std::max(0.0, 1.0 - sum(p));
  return d;
}

}  // namespace

ExactStationary exact_stationary(const FctlInstance& instance, int truncation, int max_truncation) {
  const ArrivalModel& arrivals = instance.arrivals();
  const std::vector<double> y = arrivals.pmf(std::max(1, arrivals.support_bound(1e-18)));
  int k = truncation > 0 ? truncation : std::max(64, 4 * instance.c());
  // Lost mass is renormalized back into {0..K}, which biases the tail-weighted
  // moments by roughly loss·K; keep it far below the 1e-10 needed for the pmf.
  constexpr double kLossLimit = 1e-14;
  constexpr double kStep = 1e-13;
  constexpr int kMaxIterations = 2000000;

  std::vector<double> scratch;
  std::vector<double> pi;
  for (;;) {
    if (k > max_truncation) {
      std::ostringstream msg;
      msg << instance.describe() << ": exact oracle needs truncation above " << max_truncation;
      throw SolverError(msg.str());
    }
    // Warm start from the previous (shorter) solution.
    std::vector<double> p(static_cast<std::size_t>(k) + 1, 0.0);
    if (pi.empty()) {
      p[0] = 1.0;
    } else {
      std::copy(pi.begin(), pi.end(), p.begin());
    }
    int it = 0;
    double diff = 1.0;
    while (diff >= kStep) {
      if (++it > kMaxIterations) {
        throw SolverError(instance.describe() + ": power iteration did not converge");
      }
      std::vector<double> next = p;
      cycle_step(next, instance, y, scratch);
      const double s = sum(next);
      diff = 0.0;
      for (std::size_t n = 0; n < next.size(); ++n) {
        next[n] /= s;
        diff = std::max(diff, std::abs(next[n] - p[n]));
      }
      p.swap(next);
    }
    std::vector<double> image = p;
    cycle_step(image, instance, y, scratch);
    const double mass = sum(image);
    const double loss = 1.0 - mass;
    pi = p;
    if (loss < kLossLimit) {
      ExactStationary out;
      out.truncation = k;
      out.iterations = it;
      out.mass_loss = std::max(0.0, loss);
      double residual = 0.0;
      for (std::size_t n = 0; n < p.size(); ++n) {
        residual = std::max(residual, std::abs(image[n] / mass - p[n]));
      }
      out.residual = residual;
      out.overflow = to_distribution(p);

      CycleProfile& profile = out.profile;
      profile.g = instance.g();
      profile.r = instance.r();
      std::vector<double> state = p;
      for (int j = 0; j < instance.r(); ++j) red_step(state, y, scratch);
      profile.slots.push_back(to_distribution(state));
      for (int j = 1; j <= instance.c(); ++j) {
        if (j <= instance.g()) {
          green_step(state, y, scratch);
        } else {
          red_step(state, y, scratch);
        }
        profile.slots.push_back(to_distribution(state));
      }
      return out;
    }
    k *= 2;
  }
}

}  // namespace fctl
