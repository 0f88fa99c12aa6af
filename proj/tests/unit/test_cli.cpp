#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fctl/cli.hpp"

using namespace fctl;
using namespace fctl::cli;
namespace fs = std::filesystem;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fctl_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return fctl::cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("configuration parsing") {
  const RunConfig c = parse_config(R"({
  "command": "solve",
  "g": 5,
  "r": 7,
  "arrivals": {"kind": "bernoulli", "p": 0.35},
  "backend": "roots",
  "simulation": {"cycles": 1000, "batches": 10},
  "delay_convention": "queue_only"
})");
  CHECK(c.command == "solve");
  CHECK(c.g == 5);
  CHECK(c.r == 7);
  CHECK(c.arrival_pgf().kind() == CountPgf::Kind::bernoulli);
  CHECK(c.backend == "roots");
  CHECK(c.simulation.cycles == 1000);
  CHECK(c.simulation.batches == 10);
  CHECK(c.delay_convention == DelayConvention::queue_only);
  CHECK(parse_config("{}").arrival_pgf().mean() == doctest::Approx(0.3));
}

TEST_CASE("configuration errors name the line") {
  CHECK(message_of("{\n  \"g\": 5,\n  \"bogus\": 1\n}") == "cfg.json:3: 'bogus' is not a recognized key in the top level");
  CHECK(message_of("{\n  \"g\": 5,\n  \"r\": \n}").rfind("cfg.json:4: invalid JSON", 0) == 0);
  CHECK(message_of("{\n\"g\": \"five\"}").rfind("cfg.json:2: 'g'", 0) == 0);
  CHECK(message_of(R"({"arrivals": {"kind": "uniform"}})").find("must be one of") != std::string::npos);
  CHECK(message_of(R"({"backend": "fast"})").find("contour, roots or both") != std::string::npos);
  CHECK(message_of(R"({"variant": {"kind": "hesitation", "q": 0.1}})").find("'q'") != std::string::npos);
  CHECK(message_of(R"({"command": "plot"})").find("not a known command") != std::string::npos);
}

TEST_CASE("unstable parameters are refused with the stability condition") {
  RunConfig c;
  c.arrivals = CountPgf::poisson(0.5);
  try {
    make_instance(c);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("c*E[Y] < g") != std::string::npos);
  }
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333333");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(12.0) == "12");
}

TEST_CASE("tables") {
  Table t{{"a", "b"}, {}};
  t.add({"1", "x"});
  CHECK(t.to_csv() == "a,b\n1,x\n");
  CHECK(t.to_json()["columns"][1] == "b");
}

TEST_CASE("atomic writes leave only the target") {
  const fs::path dir = scratch("atomic");
  const fs::path target = dir / "out.csv";
  write_atomic(target.string(), "first\n");
  write_atomic(target.string(), "second\n");
  CHECK(slurp(target) == "second\n");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("solve cross-checks both backends") {
  RunConfig c;
  c.command = "solve";
  c.arrivals = CountPgf::poisson(0.38);
  const CommandResult r = run_command(c);
  CHECK(r.exit_code == kOk);
  CHECK_FALSE(r.table.rows.empty());
  CHECK(r.document["command"] == "solve");
}

TEST_CASE("distribution commands produce columns that sum to one") {
  for (const std::string cmd : {"dist", "green-dist", "delay-dist"}) {
    CAPTURE(cmd);
    RunConfig c;
    c.command = cmd;
    c.g = 5;
    c.r = 5;
    const CommandResult r = run_command(c);
    REQUIRE(r.exit_code == kOk);
    const auto rows = parse_csv(r.table.to_csv());
    REQUIRE(rows.size() > 2);
    for (std::size_t col = 1; col < rows[0].size(); ++col) {
      double total = 0.0;
      for (std::size_t i = 1; i < rows.size(); ++i) total += std::stod(rows[i][col]);
      CHECK(std::abs(total - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("compare reports exact-chain agreement on a small instance") {
  RunConfig c;
  c.command = "compare";
  c.g = 2;
  c.r = 1;
  c.arrivals = CountPgf::bernoulli(0.3);
  c.simulation.cycles = 20000;
  const CommandResult r = run_command(c);
  CHECK(r.exit_code == kOk);
}

TEST_CASE("figure1 writes its panels and a manifest") {
  const fs::path dir = scratch("figure1");
  const int code = run({"fctl", "figure1", "--out", dir.string()});
  REQUIRE(code == kOk);
  for (const char* name : {"fig1a_cycle_profile.csv", "fig1b_start_of_green.csv", "fig1c_effective_green.csv",
                           "fig1d_delay_slot10.csv", "manifest.json"}) {
    CHECK(fs::exists(dir / name));
  }
  const auto delay = parse_csv(slurp(dir / "fig1d_delay_slot10.csv"));
  REQUIRE_FALSE(delay.empty());
  CHECK(delay[0] == std::vector<std::string>{"delay", "lambda=0.36", "lambda=0.38"});
  const auto green = parse_csv(slurp(dir / "fig1c_effective_green.csv"));
  CHECK(green.size() == 22);  // header + G = 0..20
  CHECK(std::abs(std::stod(green.back()[4]) - 0.71) < 0.005);
}

TEST_CASE("exit codes of the executable entry point") {
  const fs::path dir = scratch("exit");
  const std::string out = (dir / "moments.csv").string();
  CHECK(run({"fctl", "moments", "--g", "5", "--r", "5", "--out", out}) == kOk);
  CHECK(fs::exists(out));
  CHECK(run({"fctl", "solve", "--lambda", "0.5"}) == kConfigError);
  CHECK(run({"fctl", "nonsense"}) == kConfigError);
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{\n  \"bogus\": 1\n}\n";
  CHECK(run({"fctl", "solve", "--config", bad.string()}) == kConfigError);
}

TEST_CASE("simulate output is deterministic for a fixed seed") {
  RunConfig c;
  c.command = "simulate";
  c.g = 5;
  c.r = 5;
  c.seed = 9;
  c.simulation.cycles = 5000;
  CHECK(run_command(c).table.to_csv() == run_command(c).table.to_csv());
}
