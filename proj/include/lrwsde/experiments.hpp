// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lrwsde/config.hpp"
#include "lrwsde/sde.hpp"

namespace lrwsde {

inline constexpr const char* kVersion = "0.1.0";

struct OuGridRow {
  double dt = 0.0;
  double dx = 0.0;
  std::int64_t seed = 0;
  double kl = 0.0;
  double clipped_fraction = 0.0;
};

struct OuQuantRow {
  std::string scheme;
  std::string precision;
  double dt = 0.0;
  std::int64_t seed = 0;
  double kl = 0.0;
};

struct PoissonRow {
  std::string scheme;
  double dt = 0.0;
  std::int64_t seed = 0;
  double mse = 0.0;  // meaningless when exploded
  bool exploded = false;
};

struct ConvergeRow {
  std::string scheme;
  double dt = 0.0;
  double abs_error = 0.0;
  double mc_se = 0.0;
  double slope = 0.0;  // the scheme's fitted slope, repeated per row
};

struct OuGridResult {
  std::vector<OuGridRow> rows;
};
struct OuQuantResult {
  std::vector<OuQuantRow> rows;
};
struct PoissonResult {
  std::vector<PoissonRow> rows;
};
struct ConvergeResult {
  std::vector<ConvergeRow> rows;
  std::map<std::string, double> slopes;
};
struct SimulateResult {
  Index dim = 0;
  std::vector<std::int64_t> steps;
  std::vector<double> times;
  std::vector<Vector> states;
  bool diverged = false;
};

// Replica tasks fan out over a worker pool; per-row streams are derived
// from (base_seed, indices) so results do not depend on the thread count.
// threads <= 0 selects hardware concurrency.
OuGridResult run_ou_grid(const ExperimentConfig& cfg, int threads = 0);
OuQuantResult run_ou_quantisation(const ExperimentConfig& cfg,
                                  int threads = 0);
PoissonResult run_poisson(const ExperimentConfig& cfg, int threads = 0);
ConvergeResult run_convergence(const ExperimentConfig& cfg, int threads = 0);
SimulateResult run_simulate(const ExperimentConfig& cfg);

// Fixed-schema CSV with LF line endings. Non-finite KL prints "inf"; an
// exploded run prints "exploded" in the mse column.
void write_csv(const OuGridResult& r, std::ostream& os);
void write_csv(const OuQuantResult& r, std::ostream& os);
void write_csv(const PoissonResult& r, std::ostream& os);
void write_csv(const ConvergeResult& r, std::ostream& os);
void write_csv(const SimulateResult& r, std::ostream& os);

// Shortest round-trip decimal representation (infinities print "inf").
std::string format_double(double v);

struct RunSummary {
  std::int64_t rows = 0;
  std::map<std::string, double> slopes;  // converge only
};

// Runs the configured experiment, writes cfg.out (CSV) and
// cfg.out + ".meta.json" (resolved config + version).
RunSummary run_and_write(const ExperimentConfig& cfg, int threads = 0);

}  // namespace lrwsde
