// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lrwsde/experiments.hpp"

using namespace lrwsde;

namespace {

ExperimentConfig tiny_grid_config() {
  ExperimentConfig cfg = ExperimentConfig::defaults("ou-grid");
  cfg.dt_grid = {0.01, 0.05};
  cfg.dx_multipliers = {1.0, 2.0};
  cfg.seeds = 2;
  cfg.steps = 2000;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config defaults round-trip through JSON") {
  for (const char* name :
       {"ou-grid", "ou-quant", "poisson", "converge", "simulate"}) {
    const ExperimentConfig c = ExperimentConfig::defaults(name);
    const nlohmann::json j = c.to_json();
    const ExperimentConfig back = ExperimentConfig::from_json(j, name);
    CHECK(back.to_json() == j);
  }
}

TEST_CASE("unknown keys and mismatched experiments are rejected") {
  nlohmann::json j;
  j["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j, "ou-grid"), ConfigError);

  nlohmann::json j2;
  j2["experiment"] = "poisson";
  CHECK_THROWS_AS(ExperimentConfig::from_json(j2, "ou-grid"), ConfigError);

  nlohmann::json j3;
  j3["schemes"] = {"nonsense"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j3, "ou-quant"), ConfigError);

  nlohmann::json j4;
  j4["precisions"] = {"fp16"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j4, "poisson"), ConfigError);
}

TEST_CASE("scale multiplies steps, seeds and replicas with a floor of one") {
  ExperimentConfig c = ExperimentConfig::defaults("poisson");
  c.apply_scale(0.1);
  CHECK(c.steps == 5000);
  CHECK(c.seeds == 10);
  c.apply_scale(1e-9);
  CHECK(c.steps == 1);
  CHECK(c.seeds == 1);

  ExperimentConfig conv = ExperimentConfig::defaults("converge");
  conv.apply_scale(0.5);
  CHECK(conv.replicas == 50000);
}

TEST_CASE("ou-grid: row count is the full cartesian product") {
  const ExperimentConfig cfg = tiny_grid_config();
  const OuGridResult r = run_ou_grid(cfg, 2);
  CHECK(r.rows.size() == 2 * 2 * 2);
  for (const auto& row : r.rows) {
    CHECK(row.kl >= 0.0);
    CHECK(row.dx > 0.0);
  }
}

TEST_CASE("ou-grid is deterministic and thread-count independent") {
  const ExperimentConfig cfg = tiny_grid_config();
  const OuGridResult a = run_ou_grid(cfg, 1);
  const OuGridResult b = run_ou_grid(cfg, 2);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].kl == b.rows[i].kl);
    CHECK(a.rows[i].clipped_fraction == b.rows[i].clipped_fraction);
  }
}

TEST_CASE("ou-quant: same cell at two precisions shares its driving noise") {
  ExperimentConfig cfg = ExperimentConfig::defaults("ou-quant");
  cfg.dt_grid = {0.01};
  cfg.precisions = {"fp16", "fp32"};
  cfg.seeds = 2;
  cfg.steps = 4000;
  const OuQuantResult r = run_ou_quantisation(cfg, 2);
  REQUIRE(r.rows.size() == 2 * 2 * 1 * 2);
  // fp16 and fp32 rows of the same (scheme, dt, seed) follow nearly the same
  // trajectory, so their KL values sit close together
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < r.rows.size(); ++j) {
      const auto &a = r.rows[i], &b = r.rows[j];
      if (a.scheme == b.scheme && a.dt == b.dt && a.seed == b.seed &&
          a.precision != b.precision) {
        CHECK(std::fabs(a.kl - b.kl) < 0.5 * std::max(a.kl, b.kl) + 1e-3);
      }
    }
  }
}

TEST_CASE("poisson: lrw rows never explode at small scale") {
  ExperimentConfig cfg = ExperimentConfig::defaults("poisson");
  cfg.dt_grid = {0.01, 0.5};
  cfg.seeds = 2;
  cfg.steps = 2000;
  const PoissonResult r = run_poisson(cfg, 2);
  REQUIRE(r.rows.size() == 2 * 2 * 2);
  for (const auto& row : r.rows)
    if (row.scheme == "lrw") CHECK(!row.exploded);
}

TEST_CASE("converge emits one row per (scheme, dt) and a slope per scheme") {
  ExperimentConfig cfg = ExperimentConfig::defaults("converge");
  cfg.replicas = 2000;
  const ConvergeResult r = run_convergence(cfg, 2);
  CHECK(r.rows.size() == 2 * 4);
  CHECK(r.slopes.count("lrw") == 1);
  CHECK(r.slopes.count("em") == 1);
  for (const auto& row : r.rows) {
    CHECK(row.mc_se > 0.0);
    CHECK(row.abs_error >= 0.0);
  }
}

TEST_CASE("csv formatting: inf and exploded tokens") {
  OuQuantResult q;
  q.rows.push_back(
      {"lrw", "fp16", 0.1, 0, std::numeric_limits<double>::infinity()});
  std::ostringstream os;
  write_csv(q, os);
  CHECK(os.str() ==
        "scheme,precision,dt,seed,kl\nlrw,fp16,0.1,0,inf\n");

  PoissonResult p;
  p.rows.push_back({"em", 0.5, 3, std::numeric_limits<double>::quiet_NaN(),
                    true});
  p.rows.push_back({"lrw", 0.5, 3, 0.25, false});
  std::ostringstream os2;
  write_csv(p, os2);
  CHECK(os2.str() ==
        "scheme,dt,seed,mse,exploded\nem,0.5,3,exploded,1\nlrw,0.5,3,0.25,0\n");
}

TEST_CASE("format_double round-trips") {
  for (const double v : {0.1, 1.0 / 3.0, 65504.0, 1e-300, 123456.789}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("cli: byte-identical reruns and exit codes") {
  const char* cli = std::getenv("LRWSDE_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "LRWSDE_CLI must point at the binary");
  const std::string base = "/tmp/lrwsde_test_cli";
  const std::string cfg_path = base + "_cfg.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"dt_grid": [0.01], "dx_multipliers": [1.0], "seeds": 2,
               "steps": 1000, "out": ")"
        << base << R"(_a.csv"})";
  }
  std::string cmd = std::string(cli) + " ou-grid --config " + cfg_path +
                    " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  cmd = std::string(cli) + " ou-grid --config " + cfg_path + " --out " +
        base + "_b.csv > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(slurp(base + "_a.csv") == slurp(base + "_b.csv"));
  CHECK(!slurp(base + "_a.csv").empty());

  // usage errors exit with 2
  cmd = std::string(cli) + " ou-grid --config /does/not/exist.json 2>/dev/null";
  int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 2);
  {
    std::ofstream bad(base + "_bad.json");
    bad << R"({"no_such_key": true})";
  }
  cmd = std::string(cli) + " ou-grid --config " + base +
        "_bad.json 2>/dev/null";
  rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 2);
}
