#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdlab/cli.hpp"

using namespace fdlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("fdlab-test-cli-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json continuity_config() {
  return {{"kind", "continuity"},
          {"name", "cont"},
          {"alpha", 0.5},
          {"grid", {{"n", 1}, {"L", 32.0}, {"N", 256}, {"T", 1.0}, {"M", 4}}},
          {"t", 1.0},
          {"increments", {0.1, 0.05, 0.025, 0.0125}}};
}

json holder_config() {
  return {{"kind", "holder"},
          {"name", "hold"},
          {"seed", 5},
          {"alpha", 0.5},
          {"p", 4.0},
          {"q", 4.0},
          {"grid", {{"n", 1}, {"L", 8.0}, {"N", 256}, {"T", 1.0}, {"M", 128}}},
          {"trials", 2}};
}

}  // namespace

TEST_CASE("every kind is known and randomized kinds need a seed") {
  CHECK(cli::experiment_kinds().size() == 13);
  json h = holder_config();
  h.erase("seed");
  CHECK_THROWS_WITH_AS(cli::parse_config(h), doctest::Contains("seed"), cli::ConfigError);
  CHECK_NOTHROW(cli::parse_config(continuity_config()));
}

TEST_CASE("config errors name the offending field") {
  json bad = {{"kind", "capacity-bracket"},
              {"alpha", 0.5},
              {"p", 2.0},
              {"grid", {{"n", 1}, {"L", 8.0}, {"N", 128}, {"T", 1.0}, {"M", 64}}},
              {"set", {{"t0", 0.5}, {"r", 0.25}}}};
  CHECK_THROWS_WITH_AS(cli::parse_config(bad), "capacity-bracket.q: missing required field", cli::ConfigError);
  json typo = continuity_config();
  typo["increment"] = 1;
  CHECK_THROWS_WITH_AS(cli::parse_config(typo), "continuity.increment: unknown field", cli::ConfigError);
  json grid = continuity_config();
  grid["grid"]["N"] = 7;
  CHECK_THROWS_WITH_AS(cli::parse_config(grid), doctest::Contains("continuity.grid"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config(json{{"kind", "nope"}}), cli::ConfigError);
  json regime = holder_config();
  regime["p"] = 2.0;
  regime["q"] = 2.0;
  CHECK_THROWS_WITH_AS(cli::parse_config(regime), doctest::Contains("subcritical"), cli::ConfigError);
}

TEST_CASE("run writes self-describing, byte-identical results") {
  auto a = scratch("a"), b = scratch("b");
  auto cfg = cli::parse_config(holder_config());
  cfg.output_dir = a.string();
  auto ra = cli::run(cfg);
  cfg.output_dir = b.string();
  auto rb = cli::run(cfg);
  CHECK(ra.exit_code == cli::kSuccess);
  CHECK(rb.exit_code == cli::kSuccess);
  for (const char* f : {"results.json", "results.csv", "verdict.json"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  auto results = json::parse(slurp(a / "results.json"));
  CHECK(results["config"]["seed"] == 5);
  CHECK(results["config"]["kind"] == "holder");
  CHECK(slurp(a / "results.csv").rfind("# config: ", 0) == 0);
  auto verdict = json::parse(slurp(a / "verdict.json"));
  CHECK(verdict["verdict"] == "PASS");
  auto prov = json::parse(slurp(a / "provenance.json"));
  CHECK(prov.contains("wall_time_seconds"));
  CHECK(prov["code_version"] == cli::code_version());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("expected exponent override and exit codes") {
  auto out = scratch("exp");
  json j = continuity_config();
  j["expected_exponent"] = 3.0;
  auto cfg = cli::parse_config(j);
  cfg.output_dir = out.string();
  auto r = cli::run(cfg);
  CHECK(r.exit_code == cli::kAssertionFailure);
  CHECK_FALSE(r.pass);
  j["expected_exponent"] = 1.0;
  cfg = cli::parse_config(j);
  cfg.output_dir = out.string();
  CHECK(cli::run(cfg).exit_code == cli::kSuccess);
  json k = continuity_config();
  k["kind"] = "kernel-envelope";
  cli::ExperimentConfig raw;
  raw.kind = "continuity";
  raw.params = {{"alpha", 0.5}};
  CHECK(cli::run(raw).exit_code == cli::kConfigError);
  fs::remove_all(out);
}

TEST_CASE("verify_all: empty manifest, matching and mismatching expectations") {
  std::ostringstream os;
  CHECK(cli::verify_all(json{{"experiments", json::array()}}, ".", os) == 0);
  auto root = scratch("manifest");
  json good = {{"output_root", root.string()},
               {"experiments", {{{"config", continuity_config()}, {"anchor", "time continuity"}}}}};
  std::ostringstream g;
  CHECK(cli::verify_all(good, ".", g) == 0);
  CHECK(g.str().find("time continuity") != std::string::npos);
  json wrong = good;
  wrong["experiments"][0]["expected_exponent"] = 0.2;
  std::ostringstream w;
  CHECK(cli::verify_all(wrong, ".", w) == 1);
  CHECK(w.str().find("MISMATCH") != std::string::npos);
  json broken = {{"experiments", {{{"config", json{{"kind", "holder"}}}}}}};
  std::ostringstream e;
  CHECK(cli::verify_all(broken, ".", e) == 2);
  fs::remove_all(root);
}
