#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fctl/extensions.hpp"
#include "fctl/pgf.hpp"
#include "fctl/sim.hpp"

namespace fctl::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverError = 3, kCheckFailed = 4 };

/// Invalid configuration (bad JSON, unknown keys, wrong types, unstable
/// instance). The message carries the line number when one is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  int g = 20;
  int r = 30;
  std::optional<CountPgf> arrivals;  // Poisson(0.3) when not given
  std::optional<VariantParams> variant;
  std::string backend = "both";  // contour | roots | both
  std::string format = "csv";    // csv | json
  std::string out;               // empty: standard output
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
  SimConfig simulation;
  /// Points w at which `solve` evaluates the PGF.
  std::vector<double> points{0.0, 0.25, 0.5, 0.75, 1.0};
  std::optional<int> kmax;
  /// Arrival slot (1..c) for delay-dist.
  int slot = 10;
  /// Threshold k of the reported tail probabilities P(X > k).
  int threshold = 20;
  std::vector<double> lambdas{0.2, 0.3, 0.36, 0.38};
  DelayConvention delay_convention = DelayConvention::uniform_position;

  CountPgf arrival_pgf() const;
};

/// Parses a JSON configuration document. `source` names it in messages.
RunConfig parse_config(const std::string& text, const std::string& source = "config");

/// Builds the instance, refusing unstable parameters with a message that
/// cites c·E[Y] < g.
FctlInstance make_instance(const RunConfig& config);

/// Comma-separated table; every cell is already formatted.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
};

struct CommandResult {
  /// Body for --format csv.
  Table table;
  /// Body for --format json (includes the table).
  nlohmann::ordered_json document;
  int exit_code = kOk;
  /// Messages for standard error (timings, check failures).
  std::vector<std::string> notes;
  /// Additional files written next to the output (figure1).
  std::vector<std::pair<std::string, std::string>> files;
};

/// Fixed formatting of numbers in all outputs (15 significant digits).
std::string format_number(double value);

CommandResult cmd_solve(const RunConfig& config);
CommandResult cmd_moments(const RunConfig& config);
CommandResult cmd_dist(const RunConfig& config);
CommandResult cmd_cycle_profile(const RunConfig& config);
CommandResult cmd_green_dist(const RunConfig& config);
CommandResult cmd_delay_dist(const RunConfig& config);
CommandResult cmd_roots(const RunConfig& config);
CommandResult cmd_simulate(const RunConfig& config);
CommandResult cmd_compare(const RunConfig& config);
CommandResult cmd_figure1(const RunConfig& config);

CommandResult run_command(const RunConfig& config);

/// Writes `content` to `path` through a temporary file and a rename.
void write_atomic(const std::string& path, const std::string& content);

/// Entry point of the `fctl` executable; returns the process exit code.
int main(int argc, char** argv);

}  // namespace fctl::cli
