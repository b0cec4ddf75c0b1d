#include "multibump/cli.hpp"
#include "multibump/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace multibump;
namespace fs = std::filesystem;

namespace {
int run_tool(std::vector<std::string> args) {
  args.insert(args.begin(), "multibump");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("multibump_cli_" + name);
  fs::remove_all(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }
}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("git blob hashes") {
    CHECK(cli::git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(cli::git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  }

  TEST_CASE("lists and grids") {
    CHECK(cli::parse_number_list("1e2, 1e3,1e4") == std::vector<double>{100, 1000, 10000});
    CHECK_THROWS_AS(cli::parse_number_list("1,x"), InputError);
    CHECK(cli::parse_word_list("1,10 110") == std::vector<std::string>{"1", "10", "110"});
    const auto g = cli::log_grid(1e2, 1e4, 3);
    CHECK(g[1] == doctest::Approx(1e3));
    CHECK(g.back() == 1e4);
  }

  TEST_CASE("brackets") {
    using R = cli::JobRow;
    std::vector<R> rows{{"1", 10, false}, {"1", 100, true}, {"1", 1000, true}, {"10", 10, false}, {"10", 100, false}};
    const auto a = cli::bracket_for("1", rows);
    CHECK(a.mu_fail == 10);
    CHECK(a.mu_pass == 100);
    const auto b = cli::bracket_for("10", rows);
    CHECK(b.mu_fail == 100);
    CHECK(std::isinf(b.mu_pass));
    std::vector<R> all{{"1", 10, true}};
    CHECK(cli::bracket_for("1", all).mu_fail == 0.0);
  }

  TEST_CASE("exit codes by error class") {
    CHECK(cli::exit_code_for(InputError("x")) == 2);
    CHECK(cli::exit_code_for(InteriorityFailure("x")) == 3);
    CHECK(cli::exit_code_for(NewtonFailure("x")) == 4);
    CHECK(cli::exit_code_for(std::runtime_error("x")) == 5);
  }

  TEST_CASE("solve happy path writes csv, report and manifest") {
    const auto dir = scratch("solve");
    CHECK(run_tool({"solve", "--weight", MULTIBUMP_DATA_DIR "/weights/step.json", "--symbols", "10", "--periodic",
                    "--mu", "300", "--cells", "200", "--outdir", dir.string()}) == 0);
    CHECK(fs::exists(dir / "sol.csv"));
    CHECK(fs::exists(dir / "sol.gp"));
    const auto rep = read_json(dir / "report.json");
    CHECK(rep["certified"] == true);
    CHECK(rep["minimal_period"] == 2);
    const auto man = read_json(dir / "manifest.json");
    CHECK(man["status"] == "ok");
    CHECK(man["inputs"]["weight"]["sha1"] == cli::file_blob_sha1(MULTIBUMP_DATA_DIR "/weights/step.json"));
    CHECK(man["outputs"].size() == 3u);
  }

  TEST_CASE("same inputs give identical bytes") {
    const auto a = scratch("rep_a"), b = scratch("rep_b");
    for (const auto& d : {a, b})
      CHECK(run_tool({"solve", "--symbols", "1", "--periodic", "--mu", "100", "--cells", "200", "--outdir", d.string()}) == 0);
    CHECK(slurp(a / "sol.csv") == slurp(b / "sol.csv"));
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  }

  TEST_CASE("certification failure exits 3 and marks the manifest") {
    const auto dir = scratch("certfail");
    CHECK(run_tool({"solve", "--symbols", "110", "--periodic", "--mu", "2", "--mu0", "2", "--cells", "200", "--outdir",
                    dir.string()}) == 3);
    const auto rep = read_json(dir / "report.json");
    CHECK(rep["certified"] == false);
    CHECK(!rep["report"]["failures"].empty());
    CHECK(read_json(dir / "manifest.json")["status"] == "failed");
  }

  TEST_CASE("malformed weight file exits 2 without artifacts") {
    const auto dir = scratch("badweight");
    const auto bad = fs::temp_directory_path() / "multibump_cli_bad_weight.json";
    std::ofstream(bad) << "{\"T\": 2, \"tau\": ";
    CHECK(run_tool({"solve", "--weight", bad.string(), "--outdir", dir.string()}) == 2);
    CHECK(!fs::exists(dir));
    CHECK(run_tool({"solve", "--cells", "3", "--outdir", dir.string()}) == 2);
    CHECK(run_tool({"solve", "--no-such-flag"}) == 2);
    CHECK(!fs::exists(dir));
  }

  TEST_CASE("config file fills options and flags win") {
    const auto dir = scratch("config");
    const auto cfg = fs::temp_directory_path() / "multibump_cli_config.json";
    std::ofstream(cfg) << R"({"symbols": "10", "periodic": true, "mu": 5000, "cells": 200, "solve": {"mu": 250}})";
    CHECK(run_tool({"solve", "--config", cfg.string(), "--mu", "150", "--outdir", dir.string()}) == 0);
    const auto man = read_json(dir / "manifest.json");
    CHECK(man["config"]["mu"] == 150.0);
    CHECK(man["config"]["symbols"] == "10");
    CHECK(man["config"]["cells"] == 200);
    CHECK(man["inputs"].contains("config"));
    const auto dir2 = scratch("config2");
    CHECK(run_tool({"solve", "--config", cfg.string(), "--outdir", dir2.string()}) == 0);
    CHECK(read_json(dir2 / "manifest.json")["config"]["mu"] == 250.0);
  }

  TEST_CASE("sweep: 2 symbols x 3 mu give 6 job rows") {
    const auto dir = scratch("sweep");
    CHECK(run_tool({"sweep", "--symbols", "1,10", "--periodic", "--mu-list", "2,10,100", "--cells", "200", "--outdir",
                    dir.string()}) == 0);
    std::istringstream jobs(slurp(dir / "jobs.csv"));
    int lines = 0;
    for (std::string l; std::getline(jobs, l);) ++lines;
    CHECK(lines == 7);
    const auto agg = read_json(dir / "aggregate.json");
    CHECK(agg["jobs"].size() == 6u);
    CHECK(agg["brackets"].size() == 2u);
    CHECK(fs::exists(dir / "brackets.csv"));
    CHECK(fs::exists(dir / "rates.csv"));
  }

  TEST_CASE("sweep below threshold brackets as (max mu, inf)") {
    const auto dir = scratch("sweep_low");
    CHECK(run_tool({"sweep", "--symbols", "110", "--periodic", "--mu-list", "1,2", "--mu0", "1", "--cells", "200",
                    "--outdir", dir.string()}) == 0);
    const auto agg = read_json(dir / "aggregate.json");
    CHECK(agg["brackets"][0]["mu_fail"] == 2.0);
    CHECK(agg["brackets"][0]["mu_pass"] == "inf");
  }

  TEST_CASE("oracle and local subcommands") {
    const auto dir = scratch("oracle");
    CHECK(run_tool({"oracle", "ground", "--outdir", dir.string()}) == 0);
    CHECK(read_json(dir / "report.json")["level"].get<double>() == doctest::Approx(15.756060010769));
    CHECK(run_tool({"oracle", "ground", "--weight", "sine", "--outdir", (dir / "s").string()}) == 2);
    CHECK(run_tool({"oracle", "integrate", "--mu", "0", "--t1", "1", "--du0", "2", "--outdir", dir.string()}) == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(run_tool({"local", "--outdir", dir.string()}) == 0);
    CHECK(read_json(dir / "report.json").contains("lambda1"));
  }

  TEST_CASE("connection subcommand") {
    const auto dir = scratch("connection");
    CHECK(run_tool({"connection", "--mu", "1000", "--x", "2", "--y", "3", "--cells", "200", "--starts", "3", "--outdir",
                    dir.string()}) == 0);
    const auto rep = read_json(dir / "report.json");
    CHECK(rep["zeros"] == 0);
    CHECK(rep["sensitivity_signs"]["v_positive"] == true);
    CHECK(rep["uniqueness"]["holds"] == true);
    CHECK(run_tool({"connection", "--mu", "10", "--x", "3", "--y", "-3", "--outdir", (dir / "low").string()}) == 3);
  }
}
