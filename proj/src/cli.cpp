#include "fctl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "fctl/classic.hpp"
#include "fctl/contour.hpp"
#include "fctl/errors.hpp"
#include "fctl/roots.hpp"

namespace fctl::cli {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Configuration parsing.

/// Line (1-based) of the first occurrence of "key" in the text, or 0.
int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find('"' + key + '"');
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

struct Reader {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    std::ostringstream msg;
    msg << source;
    if (const int line = line_of_key(text, key); line > 0) msg << ":" << line;
    msg << ": '" << key << "' " << what;
    throw ConfigError(msg.str());
  }

  void check_keys(const json& object, const std::string& where,
                  const std::set<std::string>& allowed) const {
    if (!object.is_object()) fail(where, "must be an object");
    for (const auto& item : object.items()) {
      if (!allowed.count(item.key())) fail(item.key(), "is not a recognized key in " + where);
    }
  }

  template <class T>
  T get(const json& object, const std::string& key) const {
    try {
      return object.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "is missing or has the wrong type");
    }
  }

  CountPgf pgf(const json& spec, const std::string& where) const {
    check_keys(spec, where, {"kind", "lambda", "p", "mean", "weights"});
    const auto kind = get<std::string>(spec, "kind");
    try {
      if (kind == "poisson") return CountPgf::poisson(get<double>(spec, "lambda"));
      if (kind == "bernoulli") return CountPgf::bernoulli(get<double>(spec, "p"));
      if (kind == "geometric") return CountPgf::geometric(get<double>(spec, "mean"));
      if (kind == "finite_support") {
        return CountPgf::finite_support(get<std::vector<double>>(spec, "weights"));
      }
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
    fail("kind", "must be one of poisson, bernoulli, geometric, finite_support (got '" + kind + "')");
  }

  VariantParams variant(const json& spec) const {
    check_keys(spec, "variant", {"kind", "p", "layouts", "red_arrivals"});
    VariantParams v;
    try {
      v.variant = variant_from_string(get<std::string>(spec, "kind"));
    } catch (const std::invalid_argument& e) {
      fail("kind", e.what());
    }
    switch (v.variant) {
      case Variant::hesitation: v.hesitation = get<double>(spec, "p"); break;
      case Variant::interrupted:
        if (!spec.contains("layouts") || !spec["layouts"].is_array()) fail("layouts", "must be an array");
        for (const auto& l : spec["layouts"]) {
          check_keys(l, "layouts", {"red", "green", "probability"});
          v.layouts.push_back({get<int>(l, "red"), get<int>(l, "green"), get<double>(l, "probability")});
        }
        break;
      case Variant::dependent_red:
        if (!spec.contains("red_arrivals")) fail("red_arrivals", "is required for dependent_red");
        v.red_arrivals = pgf(spec["red_arrivals"], "red_arrivals");
        break;
      case Variant::custom: fail("kind", "'custom' cannot be configured from a file");
      default: break;
    }
    return v;
  }
};

const std::set<std::string> kCommands{"solve",       "moments",    "dist",      "cycle-profile",
                                      "green-dist",  "delay-dist", "roots",     "simulate",
                                      "compare",     "figure1"};

// ---------------------------------------------------------------------------
// Formatting helpers.

std::string num(double v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }

double discrepancy(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double discrepancy(cplx a, cplx b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string timing(const std::string& what, double seconds) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "timing: %s %.3f s", what.c_str(), seconds);
  return buf;
}

// ---------------------------------------------------------------------------
// Backends.

bool wants_contour(const RunConfig& c) { return c.backend == "contour" || c.backend == "both"; }
bool wants_roots(const RunConfig& c) { return c.backend == "roots" || c.backend == "both"; }

struct Backends {
  std::optional<ContourSolution> contour;
  std::optional<RootSolution> roots;

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (contour) out.push_back("contour");
    if (roots) out.push_back("roots");
    return out;
  }
  QueueDistribution pmf(const std::string& name, std::optional<int> kmax) const {
    return name == "contour" ? contour->pmf_overflow(kmax) : roots->pmf_overflow(kmax);
  }
  cplx eval(const std::string& name, double w) const {
    return name == "contour" ? contour->eval_pgf(w) : roots->eval_pgf(w);
  }
  double mean(const std::string& name) const {
    return name == "contour" ? contour->mean_overflow() : roots->mean_overflow();
  }
  double variance(const std::string& name) const {
    return name == "contour" ? contour->variance_overflow() : roots->variance_overflow();
  }
  double prob_empty(const std::string& name) const {
    return name == "contour" ? contour->prob_empty() : roots->prob_empty();
  }
};

Backends build_backends(const RunConfig& config, const FctlInstance& instance, CommandResult& out) {
  Backends b;
  if (wants_contour(config)) {
    Stopwatch sw;
    b.contour.emplace(instance);
    b.contour->mean_overflow();
    out.notes.push_back(timing("contour backend", sw.seconds()));
  }
  if (wants_roots(config)) {
    Stopwatch sw;
    b.roots.emplace(instance);
    out.notes.push_back(timing("roots backend", sw.seconds()));
  }
  return b;
}

/// Columns "<name>" per backend and a discrepancy column when both run.
std::vector<std::string> value_columns(const std::string& first, const Backends& b) {
  std::vector<std::string> cols{first};
  for (const auto& n : b.names()) cols.push_back(n);
  if (b.names().size() == 2) cols.push_back("discrepancy");
  return cols;
}

void require_standard(const RunConfig& config) {
  if (config.variant && config.variant->variant != Variant::standard) {
    throw ConfigError("command '" + config.command + "' supports the standard queue only");
  }
}

bool has_variant(const RunConfig& config) {
  return config.variant && config.variant->variant != Variant::standard;
}

GeneralizedInstance make_variant(const RunConfig& config) {
  const FctlInstance base = make_instance(config);
  try {
    return build_variant(base, *config.variant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("variant: ") + e.what());
  }
}

/// Adds a check row and records failures.
struct CheckTable {
  Table table{{"check", "value", "tolerance", "pass"}, {}};
  bool all_pass = true;
  std::vector<std::string> failures;

  void add(const std::string& name, double value, double tolerance, bool pass) {
    table.add({name, num(value), num(tolerance), pass ? "yes" : "no"});
    if (!pass) {
      all_pass = false;
      failures.push_back("check failed: " + name + " = " + num(value) + " (tolerance " +
                         num(tolerance) + ")");
    }
  }
};

void finish(CommandResult& r, const std::string& command, const std::string& description) {
  ojson doc;
  doc["command"] = command;
  doc["instance"] = description;
  for (auto& [k, v] : r.document.items()) doc[k] = v;
  doc["table"] = r.table.to_json();
  r.document = std::move(doc);
}

QueueDistribution delay_from(const RunConfig& config, const FctlInstance& instance,
                             const CycleProfile& profile) {
  if (config.slot < 1 || config.slot > instance.c()) {
    throw ConfigError("slot must lie in 1.." + std::to_string(instance.c()));
  }
  return delay_distribution(instance, profile, config.slot, config.delay_convention);
}

/// Appends pmf columns (one per series) plus a final "tail" row.
void pmf_table(Table& t, const std::vector<QueueDistribution>& series) {
  int top = 0;
  for (const auto& d : series) top = std::max(top, d.max_index());
  for (int k = 0; k <= top; ++k) {
    std::vector<std::string> row{num(k)};
    for (const auto& d : series) row.push_back(num(d.at(k)));
    t.add(row);
  }
  std::vector<std::string> row{"tail"};
  for (const auto& d : series) {
    double shown = 0.0;
    for (int k = 0; k <= top; ++k) shown += d.at(k);
    row.push_back(num(std::max(0.0, 1.0 - shown)));
  }
  t.add(row);
}

}  // namespace

// ---------------------------------------------------------------------------

CountPgf RunConfig::arrival_pgf() const { return arrivals ? *arrivals : CountPgf::poisson(0.3); }

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n');
    std::ostringstream msg;
    msg << source << ":" << line << ": invalid JSON (" << e.what() << ")";
    throw ConfigError(msg.str());
  }
  const Reader rd{text, source};
  rd.check_keys(doc, "the top level",
                {"command", "g", "r", "arrivals", "variant", "backend", "format", "out",
                 "tolerance", "seed", "simulation", "points", "kmax", "slot", "threshold",
                 "lambdas", "delay_convention"});
  RunConfig c;
  if (doc.contains("command")) c.command = rd.get<std::string>(doc, "command");
  if (doc.contains("g")) c.g = rd.get<int>(doc, "g");
  if (doc.contains("r")) c.r = rd.get<int>(doc, "r");
  if (doc.contains("arrivals")) c.arrivals = rd.pgf(doc["arrivals"], "arrivals");
  if (doc.contains("variant")) c.variant = rd.variant(doc["variant"]);
  if (doc.contains("backend")) c.backend = rd.get<std::string>(doc, "backend");
  if (doc.contains("format")) c.format = rd.get<std::string>(doc, "format");
  if (doc.contains("out")) c.out = rd.get<std::string>(doc, "out");
  if (doc.contains("tolerance")) c.tolerance = rd.get<double>(doc, "tolerance");
  if (doc.contains("seed")) c.seed = rd.get<std::uint64_t>(doc, "seed");
  if (doc.contains("points")) c.points = rd.get<std::vector<double>>(doc, "points");
  if (doc.contains("kmax")) c.kmax = rd.get<int>(doc, "kmax");
  if (doc.contains("slot")) c.slot = rd.get<int>(doc, "slot");
  if (doc.contains("threshold")) c.threshold = rd.get<int>(doc, "threshold");
  if (doc.contains("lambdas")) c.lambdas = rd.get<std::vector<double>>(doc, "lambdas");
  if (doc.contains("simulation")) {
    const json& s = doc["simulation"];
    rd.check_keys(s, "simulation", {"cycles", "warmup", "batches", "truncation"});
    if (s.contains("cycles")) c.simulation.cycles = rd.get<std::int64_t>(s, "cycles");
    if (s.contains("warmup")) c.simulation.warmup = rd.get<std::int64_t>(s, "warmup");
    if (s.contains("batches")) c.simulation.batches = rd.get<int>(s, "batches");
    if (s.contains("truncation")) c.simulation.truncation = rd.get<int>(s, "truncation");
  }
  if (doc.contains("delay_convention")) {
    const auto conv = rd.get<std::string>(doc, "delay_convention");
    if (conv == "uniform_position") {
      c.delay_convention = DelayConvention::uniform_position;
    } else if (conv == "queue_only") {
      c.delay_convention = DelayConvention::queue_only;
    } else {
      rd.fail("delay_convention", "must be uniform_position or queue_only");
    }
  }
  if (c.backend != "contour" && c.backend != "roots" && c.backend != "both") {
    rd.fail("backend", "must be contour, roots or both");
  }
  if (c.format != "csv" && c.format != "json") rd.fail("format", "must be csv or json");
  if (!c.command.empty() && !kCommands.count(c.command)) rd.fail("command", "is not a known command");
  return c;
}

FctlInstance make_instance(const RunConfig& config) {
  if (config.g < 1 || config.r < 0) throw ConfigError("need g >= 1 and r >= 0");
  try {
    return FctlInstance(config.g, config.r, ArrivalModel(config.arrival_pgf()));
  } catch (const StabilityError& e) {
    throw ConfigError(std::string(e.what()) + " (stability requires c*E[Y] < g)");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("arrivals: ") + e.what());
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

std::string Table::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

ojson Table::to_json() const {
  ojson t;
  t["columns"] = columns;
  t["rows"] = rows;
  return t;
}

// ---------------------------------------------------------------------------
// Commands.

CommandResult cmd_solve(const RunConfig& config) {
  CommandResult r;
  if (has_variant(config)) {
    if (config.backend == "roots") throw ConfigError("variants are solved by the contour backend only");
    const GeneralizedInstance gi = make_variant(config);
    Stopwatch sw;
    const GeneralizedSolution gs(gi);
    r.table.columns = {"quantity", "contour"};
    for (double w : config.points) r.table.add({"X(" + num(w) + ")", num(gs.eval_pgf(w).real())});
    const QueueDistribution pmf = gs.pmf(kMaxJetOrder);
    r.table.add({"mean", num(gs.mean())});
    r.table.add({"variance", num(gs.variance())});
    r.table.add({"P(X=0)", num(gs.prob_empty())});
    r.table.add({"P(X>" + num(config.threshold) + ")", num(pmf.survival(config.threshold))});
    r.notes.push_back(timing("contour backend", sw.seconds()));
    finish(r, "solve", gi.describe());
    return r;
  }
  const FctlInstance instance = make_instance(config);
  const Backends b = build_backends(config, instance, r);
  const auto names = b.names();
  r.table.columns = value_columns("quantity", b);
  double worst = 0.0;
  auto row = [&](const std::string& label, const std::vector<double>& values) {
    std::vector<std::string> cells{label};
    for (double v : values) cells.push_back(num(v));
    if (values.size() == 2) {
      const double d = discrepancy(values[0], values[1]);
      worst = std::max(worst, d);
      cells.push_back(num(d));
    }
    r.table.add(cells);
  };
  for (double w : config.points) {
    std::vector<double> v;
    for (const auto& n : names) v.push_back(b.eval(n, w).real());
    row("X_g(" + num(w) + ")", v);
  }
  std::vector<double> means, vars, empties, tail_g, tail_0;
  for (const auto& n : names) {
    means.push_back(b.mean(n));
    vars.push_back(b.variance(n));
    empties.push_back(b.prob_empty(n));
    const QueueDistribution pmf = b.pmf(n, config.kmax);
    tail_g.push_back(pmf.survival(config.threshold));
    tail_0.push_back(cycle_profile(instance, pmf).start_of_green().survival(config.threshold));
  }
  row("mean", means);
  row("variance", vars);
  row("P(X_g=0)", empties);
  row("P(X_g>" + num(config.threshold) + ")", tail_g);
  row("P(X_0>" + num(config.threshold) + ")", tail_0);
  r.document["load"] = instance.load();
  if (names.size() == 2) {
    r.document["max_discrepancy"] = worst;
    r.document["tolerance"] = config.tolerance;
    if (worst > config.tolerance) {
      r.exit_code = kCheckFailed;
      r.notes.push_back("backend discrepancy " + num(worst) + " exceeds tolerance " +
                        num(config.tolerance));
    }
  }
  finish(r, "solve", instance.describe());
  return r;
}

CommandResult cmd_moments(const RunConfig& config) {
  CommandResult r;
  if (has_variant(config)) {
    const GeneralizedInstance gi = make_variant(config);
    const GeneralizedSolution gs(gi);
    r.table.columns = {"quantity", "contour"};
    r.table.add({"mean", num(gs.mean())});
    r.table.add({"variance", num(gs.variance())});
    r.table.add({"P(X=0)", num(gs.prob_empty())});
    finish(r, "moments", gi.describe());
    return r;
  }
  const FctlInstance instance = make_instance(config);
  const Backends b = build_backends(config, instance, r);
  r.table.columns = value_columns("quantity", b);
  auto row = [&](const std::string& label, auto f) {
    std::vector<std::string> cells{label};
    std::vector<double> v;
    for (const auto& n : b.names()) v.push_back(f(n));
    for (double x : v) cells.push_back(num(x));
    if (v.size() == 2) cells.push_back(num(discrepancy(v[0], v[1])));
    r.table.add(cells);
  };
  row("mean", [&](const std::string& n) { return b.mean(n); });
  row("variance", [&](const std::string& n) { return b.variance(n); });
  row("std_dev", [&](const std::string& n) { return std::sqrt(b.variance(n)); });
  row("P(X_g=0)", [&](const std::string& n) { return b.prob_empty(n); });
  finish(r, "moments", instance.describe());
  return r;
}

CommandResult cmd_dist(const RunConfig& config) {
  CommandResult r;
  if (has_variant(config)) {
    const GeneralizedInstance gi = make_variant(config);
    const GeneralizedSolution gs(gi);
    const int kmax = std::min(config.kmax.value_or(kMaxJetOrder), kMaxJetOrder);
    r.table.columns = {"k", "contour"};
    pmf_table(r.table, {gs.pmf(kmax)});
    finish(r, "dist", gi.describe());
    return r;
  }
  const FctlInstance instance = make_instance(config);
  const Backends b = build_backends(config, instance, r);
  r.table.columns = {"k"};
  std::vector<QueueDistribution> series;
  std::optional<int> kmax = config.kmax;
  for (const auto& n : b.names()) {
    series.push_back(b.pmf(n, kmax));
    kmax = series.back().max_index();  // same support for every backend
    r.table.columns.push_back(n);
  }
  pmf_table(r.table, series);
  finish(r, "dist", instance.describe());
  return r;
}

namespace {

std::vector<std::pair<std::string, CycleProfile>> profiles(const RunConfig& config,
                                                          const FctlInstance& instance,
                                                          const Backends& b) {
  std::vector<std::pair<std::string, CycleProfile>> out;
  for (const auto& n : b.names()) out.emplace_back(n, cycle_profile(instance, b.pmf(n, std::nullopt)));
  (void)config;
  return out;
}

std::string phase_of(int slot, int g) {
  if (slot == 0) return "start";
  return slot <= g ? "green" : "red";
}

}  // namespace

CommandResult cmd_cycle_profile(const RunConfig& config) {
  require_standard(config);
  CommandResult r;
  const FctlInstance instance = make_instance(config);
  const Backends b = build_backends(config, instance, r);
  const auto ps = profiles(config, instance, b);
  r.table.columns = {"slot", "phase"};
  for (const auto& [n, p] : ps) {
    r.table.columns.push_back("mean_" + n);
    r.table.columns.push_back("empty_" + n);
  }
  for (int k = 0; k <= instance.c(); ++k) {
    std::vector<std::string> row{num(k), phase_of(k, instance.g())};
    for (const auto& [n, p] : ps) {
      row.push_back(num(p.slots[k].mean()));
      row.push_back(num(p.slots[k].at(0)));
    }
    r.table.add(row);
  }
  finish(r, "cycle-profile", instance.describe());
  return r;
}

CommandResult cmd_green_dist(const RunConfig& config) {
  require_standard(config);
  CommandResult r;
  const FctlInstance instance = make_instance(config);
  const Backends b = build_backends(config, instance, r);
  r.table.columns = {"k"};
  std::vector<QueueDistribution> series;
  if (b.contour) {
    series.push_back(effective_green(cycle_profile(instance, b.contour->pmf_overflow())));
    r.table.columns.push_back("contour");
  }
  if (b.roots) {
    series.push_back(effective_green(b.roots->boundary(), instance.g()));
    r.table.columns.push_back("roots");
  }
  for (int k = 0; k <= instance.g(); ++k) {
    std::vector<std::string> row{num(k)};
    for (const auto& d : series) row.push_back(num(d.at(k)));
    r.table.add(row);
  }
  r.document["p_full_green"] = series.front().at(instance.g());
  finish(r, "green-dist", instance.describe());
  return r;
}

CommandResult cmd_delay_dist(const RunConfig& config) {
  require_standard(config);
  CommandResult r;
  const FctlInstance instance = make_instance(config);
  const Backends b = build_backends(config, instance, r);
  r.table.columns = {"delay"};
  std::vector<QueueDistribution> series;
  for (const auto& [n, p] : profiles(config, instance, b)) {
    series.push_back(delay_from(config, instance, p));
    r.table.columns.push_back(n);
  }
  pmf_table(r.table, series);
  r.document["slot"] = config.slot;
  r.document["convention"] = config.delay_convention == DelayConvention::uniform_position
                                 ? "uniform_position"
                                 : "queue_only";
  finish(r, "delay-dist", instance.describe());
  return r;
}

CommandResult cmd_roots(const RunConfig& config) {
  require_standard(config);
  CommandResult r;
  const FctlInstance instance = make_instance(config);
  Stopwatch sw;
  const RootSet rs = find_roots(instance);
  r.notes.push_back(timing("root finding", sw.seconds()));
  std::optional<RootSet> lambert;
  if (instance.arrivals().kind() == CountPgf::Kind::poisson) lambert = lambert_roots(instance);
  r.table.columns = {"index", "re", "im", "modulus", "residual"};
  if (lambert) r.table.columns.push_back("lambert_distance");
  for (std::size_t k = 0; k < rs.roots.size(); ++k) {
    const cplx z = rs.roots[k];
    std::vector<std::string> row{num(static_cast<int>(k)), num(z.real()), num(z.imag()),
                                 num(std::abs(z)), num(rs.residuals[k])};
    if (lambert) {
      double best = kInfinity;
      for (const cplx w : lambert->roots) best = std::min(best, std::abs(w - z));
      row.push_back(num(best));
    }
    r.table.add(row);
  }
  const CertificationReport& rep = rs.report;
  r.document["truncation_order"] = rs.truncation_order;
  r.document["certification"] = {{"winding_count", rep.winding_count},
                                 {"count_ok", rep.count_ok},
                                 {"tail_mass", rep.tail_mass},
                                 {"worst_bound_ratio", rep.worst_bound_ratio},
                                 {"bound_ok", rep.bound_ok},
                                 {"truncation_ok", rep.truncation_ok},
                                 {"max_seed_displacement", rep.max_seed_displacement},
                                 {"fallback_used", rs.fallback_used},
                                 {"certified", rep.certified},
                                 {"diagnostics", rep.diagnostics}};
  if (!rep.certified) {
    r.exit_code = kCheckFailed;
    r.notes.push_back("root set is not certified");
  }
  finish(r, "roots", instance.describe());
  return r;
}

namespace {

void pmf_rows(Table& t, const std::string& series, const EmpiricalPmf& p) {
  for (std::size_t k = 0; k < p.pmf.size(); ++k) {
    t.add({series, num(static_cast<int>(k)), num(p.pmf[k]), num(p.se[k])});
  }
}

ojson pmf_json(const EmpiricalPmf& p) {
  return ojson{{"samples", p.samples}, {"pmf", p.pmf}, {"se", p.se}};
}

}  // namespace

CommandResult cmd_simulate(const RunConfig& config) {
  CommandResult r;
  SimConfig sc = config.simulation;
  sc.seed = config.seed;
  Stopwatch sw;
  std::string description;
  SimReport rep;
  if (has_variant(config)) {
    const GeneralizedInstance gi = make_variant(config);
    description = gi.describe();
    rep = simulate(gi, sc);
  } else {
    const FctlInstance instance = make_instance(config);
    description = instance.describe();
    rep = simulate(instance, sc);
  }
  r.notes.push_back(timing("simulation", sw.seconds()));
  Table& t = r.table;
  t.columns = {"series", "index", "value", "se"};
  t.add({"mean", "0", num(rep.mean), num(rep.mean_se)});
  t.add({"variance", "0", num(rep.variance), num(rep.variance_se)});
  pmf_rows(t, "overflow", rep.overflow);
  pmf_rows(t, "start_of_green", rep.start_of_green);
  pmf_rows(t, "effective_green", rep.effective_green);
  for (std::size_t k = 0; k < rep.slot_means.size(); ++k) {
    t.add({"slot_mean", num(static_cast<int>(k)), num(rep.slot_means[k]), num(rep.slot_means_se[k])});
  }
  for (std::size_t s = 0; s < rep.delays.size(); ++s) {
    pmf_rows(t, "delay_slot_" + std::to_string(s + 1), rep.delays[s]);
  }

  ojson& d = r.document;
  d["cycles"] = rep.cycles;
  d["warmup"] = rep.warmup;
  d["seed"] = rep.seed;
  d["batches"] = rep.batches;
  d["mean"] = {{"value", rep.mean}, {"se", rep.mean_se}};
  d["variance"] = {{"value", rep.variance}, {"se", rep.variance_se}};
  d["overflow"] = pmf_json(rep.overflow);
  d["start_of_green"] = pmf_json(rep.start_of_green);
  d["effective_green"] = pmf_json(rep.effective_green);
  d["slot_means"] = {{"value", rep.slot_means}, {"se", rep.slot_means_se}};
  ojson delays = ojson::array();
  for (const auto& p : rep.delays) delays.push_back(pmf_json(p));
  d["delays"] = delays;
  d["arrivals"] = {{"total", rep.arrivals},
                   {"delayed", rep.arrivals_delayed},
                   {"passed", rep.arrivals_passed},
                   {"empty_green_delays", rep.empty_green_delays}};
  d["diagnostics"] = rep.diagnostics;
  finish(r, "simulate", description);
  return r;
}

CommandResult cmd_compare(const RunConfig& config) {
  require_standard(config);
  CommandResult r;
  RunConfig both = config;
  both.backend = "both";
  const FctlInstance instance = make_instance(both);
  const Backends b = build_backends(both, instance, r);
  const ContourSolution& cs = *b.contour;
  const RootSolution& rs = *b.roots;
  const double tol = config.tolerance;
  CheckTable checks;

  double pgf_gap = 0.0, form_gap = 0.0;
  for (double w : config.points) {
    pgf_gap = std::max(pgf_gap, discrepancy(cs.eval_pgf(w), rs.eval_pgf(w)));
    form_gap = std::max(form_gap, discrepancy(cs.eval_pgf(w, PgfForm::pk1), cs.eval_pgf(w, PgfForm::pk2)));
  }
  checks.add("contour vs roots: X_g(w)", pgf_gap, tol, pgf_gap <= tol);
  checks.add("contour: two integral forms", form_gap, tol, form_gap <= tol);
  const double mean_gap = discrepancy(cs.mean_overflow(), rs.mean_overflow());
  const double var_gap = discrepancy(cs.variance_overflow(), rs.variance_overflow());
  checks.add("contour vs roots: mean", mean_gap, 1e-8, mean_gap <= 1e-8);
  checks.add("contour vs roots: variance", var_gap, 1e-8, var_gap <= 1e-8);
  const double norm = std::abs(cs.eval_pgf(1.0) - 1.0);
  checks.add("normalization |X_g(1)-1|", norm, 1e-10, norm <= 1e-10);
  checks.add("roots certified", rs.roots().certified() ? 1.0 : 0.0, 1.0, rs.roots().certified());

  // Bulk-service comparison: equality for Bernoulli arrivals, upper bound otherwise.
  {
    Stopwatch sw;
    const ContourSolution bulk = bulk_service(instance.g(), instance.cycle_series());
    if (instance.arrivals().is_linear()) {
      double gap = 0.0;
      for (double w : config.points) {
        gap = std::max(gap, discrepancy(bulk.eval_pgf(w, PgfForm::pk2), cs.eval_pgf(w)));
      }
      checks.add("queue vs bulk service (equal for Bernoulli)", gap, tol, gap <= tol);
    } else {
      const double excess = bulk.mean_overflow() - cs.mean_overflow();
      checks.add("bulk-service mean minus queue mean (>= 0)", excess, 0.0, excess >= -tol);
    }
    r.notes.push_back(timing("bulk service", sw.seconds()));
  }

  if (instance.g() <= 5 && instance.c() <= 12) {
    Stopwatch sw;
    const ExactStationary ex = exact_stationary(instance, config.simulation.truncation);
    const QueueDistribution pc = cs.pmf_overflow(ex.overflow.max_index());
    const QueueDistribution pr = rs.pmf_overflow(ex.overflow.max_index());
    const double tv_c = total_variation(pc, ex.overflow);
    const double tv_r = total_variation(pr, ex.overflow);
    checks.add("exact chain vs contour (TV)", tv_c, 1e-8, tv_c <= 1e-8);
    checks.add("exact chain vs roots (TV)", tv_r, 1e-8, tv_r <= 1e-8);
    r.notes.push_back(timing("exact oracle", sw.seconds()));
  }

  if (config.simulation.cycles > 0) {
    Stopwatch sw;
    SimConfig sc = config.simulation;
    sc.seed = config.seed;
    const SimReport sim = simulate(instance, sc);
    const double z_mean = sim.mean_se > 0 ? std::abs(sim.mean - cs.mean_overflow()) / sim.mean_se : 0.0;
    const double p0_se = sim.overflow.se_at(0);
    const double z_p0 = p0_se > 0 ? std::abs(sim.overflow.at(0) - cs.prob_empty()) / p0_se : 0.0;
    checks.add("simulation vs contour: mean (z-score)", z_mean, 3.0, z_mean <= 3.0);
    checks.add("simulation vs contour: P(X_g=0) (z-score)", z_p0, 3.0, z_p0 <= 3.0);
    r.notes.push_back(timing("simulation", sw.seconds()));
  }

  r.table = checks.table;
  r.document["all_pass"] = checks.all_pass;
  if (!checks.all_pass) {
    r.exit_code = kCheckFailed;
    for (const auto& f : checks.failures) r.notes.push_back(f);
  }
  finish(r, "compare", instance.describe());
  return r;
}

CommandResult cmd_figure1(const RunConfig& config) {
  require_standard(config);
  CommandResult r;
  struct Column {
    double lambda;
    double load;
    CycleProfile profile;
    QueueDistribution green;
    std::optional<QueueDistribution> delay;
    double mean, variance;
  };
  std::vector<Column> cols;
  const int g = config.g;
  for (double lambda : config.lambdas) {
    RunConfig rc = config;
    rc.arrivals = CountPgf::poisson(lambda);
    const FctlInstance instance = make_instance(rc);
    Stopwatch sw;
    Column col{lambda, instance.load(), {}, {}, std::nullopt, 0.0, 0.0};
    QueueDistribution overflow;
    if (config.backend == "roots") {
      const RootSolution rs(instance);
      overflow = rs.pmf_overflow();
      col.mean = rs.mean_overflow();
      col.variance = rs.variance_overflow();
    } else {
      const ContourSolution cs(instance);
      overflow = cs.pmf_overflow();
      col.mean = cs.mean_overflow();
      col.variance = cs.variance_overflow();
    }
    col.profile = cycle_profile(instance, overflow);
    col.green = effective_green(col.profile);
    // The delay panel covers the two heaviest loads only (ρ >= 0.9).
    if (col.load >= 0.9 - 1e-12) col.delay = delay_from(config, instance, col.profile);
    cols.push_back(std::move(col));
    r.notes.push_back(timing("figure1 lambda=" + num(lambda), sw.seconds()));
  }
  auto header = [&](const std::string& first, bool delay_only) {
    std::vector<std::string> h{first};
    for (const auto& c : cols) {
      if (!delay_only || c.delay) h.push_back("lambda=" + num(c.lambda));
    }
    return h;
  };

  Table a{header("slot", false), {}};
  a.columns.insert(a.columns.begin() + 1, "phase");
  for (int k = 0; k <= config.g + config.r; ++k) {
    std::vector<std::string> row{num(k), phase_of(k, g)};
    for (const auto& c : cols) row.push_back(num(c.profile.slots[k].mean()));
    a.add(row);
  }
  Table b{header("k", false), {}};
  {
    std::vector<QueueDistribution> series;
    for (const auto& c : cols) series.push_back(c.profile.start_of_green());
    pmf_table(b, series);
  }
  Table c{header("k", false), {}};
  for (int k = 0; k <= g; ++k) {
    std::vector<std::string> row{num(k)};
    for (const auto& col : cols) row.push_back(num(col.green.at(k)));
    c.add(row);
  }
  Table d{header("delay", true), {}};
  {
    std::vector<QueueDistribution> series;
    for (const auto& col : cols) {
      if (col.delay) series.push_back(*col.delay);
    }
    if (!series.empty()) pmf_table(d, series);
  }

  r.files = {{"fig1a_cycle_profile.csv", a.to_csv()},
             {"fig1b_start_of_green.csv", b.to_csv()},
             {"fig1c_effective_green.csv", c.to_csv()},
             {"fig1d_delay_slot" + std::to_string(config.slot) + ".csv", d.to_csv()}};

  ojson manifest;
  manifest["g"] = config.g;
  manifest["r"] = config.r;
  manifest["arrivals"] = "poisson";
  manifest["lambdas"] = config.lambdas;
  manifest["backend"] = config.backend == "roots" ? "roots" : "contour";
  manifest["files"] = {
      {{"name", r.files[0].first},
       {"columns", a.columns},
       {"content", "mean queue length after each slot; slot 0 is the start of green"}},
      {{"name", r.files[1].first},
       {"columns", b.columns},
       {"content", "pmf of the queue at the start of green; last row is P(X > max k)"}},
      {{"name", r.files[2].first},
       {"columns", c.columns},
       {"content", "pmf of the effective green time G (slots until the queue first empties)"}},
      {{"name", r.files[3].first},
       {"columns", d.columns},
       {"content", "delay pmf (slots) of a vehicle arriving in slot " + std::to_string(config.slot) +
                       ", loads >= 0.9 only; last row is the tail"}}};
  r.files.emplace_back("manifest.json", manifest.dump(2) + "\n");

  r.table.columns = {"lambda", "load", "mean", "variance", "P(X_g>" + num(config.threshold) + ")",
                     "P(X_0>" + num(config.threshold) + ")", "P(G=g)"};
  for (const auto& col : cols) {
    r.table.add({num(col.lambda), num(col.load), num(col.mean), num(col.variance),
                 num(col.profile.slots[g].survival(config.threshold)),
                 num(col.profile.start_of_green().survival(config.threshold)), num(col.green.at(g))});
  }
  finish(r, "figure1", "g=" + std::to_string(config.g) + " r=" + std::to_string(config.r) + " Y=Poisson");
  return r;
}

CommandResult run_command(const RunConfig& config) {
  const std::string& c = config.command;
  if (c == "solve") return cmd_solve(config);
  if (c == "moments") return cmd_moments(config);
  if (c == "dist") return cmd_dist(config);
  if (c == "cycle-profile") return cmd_cycle_profile(config);
  if (c == "green-dist") return cmd_green_dist(config);
  if (c == "delay-dist") return cmd_delay_dist(config);
  if (c == "roots") return cmd_roots(config);
  if (c == "simulate") return cmd_simulate(config);
  if (c == "compare") return cmd_compare(config);
  if (c == "figure1") return cmd_figure1(config);
  throw ConfigError("unknown command '" + c + "'");
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

int main(int argc, char** argv) {
  CLI::App app{"Fixed-cycle traffic-light queue solver"};
  std::string command, config_path, backend, format, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol, lambda;
  std::optional<int> g, r, slot, kmax;
  std::optional<std::int64_t> cycles;
  app.add_option("command", command, "solve | moments | dist | cycle-profile | green-dist | "
                                     "delay-dist | roots | simulate | compare | figure1")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(kCommands.begin(), kCommands.end())));
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--backend", backend, "contour | roots | both")
      ->check(CLI::IsMember({"contour", "roots", "both"}));
  app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", out, "output file (figure1: output directory)");
  app.add_option("--seed", seed, "simulation seed");
  app.add_option("--tol", tol, "cross-check tolerance");
  app.add_option("--lambda", lambda, "Poisson arrival rate per slot (overrides the config)");
  app.add_option("--g", g, "green slots");
  app.add_option("--r", r, "red slots");
  app.add_option("--slot", slot, "arrival slot for delay-dist (1..c)");
  app.add_option("--kmax", kmax, "largest queue length reported by dist");
  app.add_option("--cycles", cycles, "simulated cycles");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      std::stringstream buf;
      buf << in.rdbuf();
      config = parse_config(buf.str(), config_path);
    }
    config.command = command;
    if (!backend.empty()) config.backend = backend;
    if (!format.empty()) config.format = format;
    if (!out.empty()) config.out = out;
    if (seed) config.seed = *seed;
    if (tol) config.tolerance = *tol;
    if (lambda) config.arrivals = CountPgf::poisson(*lambda);
    if (g) config.g = *g;
    if (r) config.r = *r;
    if (slot) config.slot = *slot;
    if (kmax) config.kmax = *kmax;
    if (cycles) config.simulation.cycles = *cycles;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  CommandResult result;
  try {
    result = run_command(config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StabilityError& e) {
    std::cerr << "error: " << e.what() << " (stability requires c*E[Y] < g)\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolverError;
  }
  for (const auto& note : result.notes) std::cerr << note << '\n';

  const std::string body =
      config.format == "json" ? result.document.dump(2) + "\n" : result.table.to_csv();
  try {
    if (config.command == "figure1") {
      const std::string dir = config.out.empty() ? "figure1" : config.out;
      for (const auto& [name, content] : result.files) {
        write_atomic((std::filesystem::path(dir) / name).string(), content);
      }
      std::cout << body;
    } else if (config.out.empty()) {
      std::cout << body;
    } else {
      write_atomic(config.out, body);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverError;
  }
  return result.exit_code;
}

}  // namespace fctl::cli
