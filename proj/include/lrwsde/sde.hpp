// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrwsde/rng.hpp"

namespace lrwsde {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;
using Index = Eigen::Index;

// Evaluator writing into a caller-provided buffer of length dim.
using FieldFn = std::function<void(const Vector& x, double t, Vector& out)>;

// dx = f(x,t) dt + sigma(x,t) dw with diagonal sigma stored as a vector of
// nonnegative per-coordinate amplitudes.
struct SdeSpec {
  Index dim = 0;
  FieldFn drift;
  FieldFn diffusion;
};

// Spatial stepsize schedule t -> dx(t) with elementwise positive entries.
class DxSchedule {
 public:
  DxSchedule() = default;
  explicit DxSchedule(std::function<void(double t, Vector& out)> eval)
      : eval_(std::move(eval)) {}

  static DxSchedule constant(Vector dx);
  static DxSchedule constant(double dx, Index dim);

  bool empty() const { return !eval_; }
  void operator()(double t, Vector& out) const { eval_(t, out); }

 private:
  std::function<void(double, Vector&)> eval_;
};

struct StepConfig {
  double dt = 0.0;
  std::int64_t n_steps = 0;
  double t0 = 0.0;
  DxSchedule dx;  // consumed by lattice steppers; may be empty otherwise
};

// Single-step transition x_t -> x_{t+dt}, advancing the state in place.
// A Stepper owns scratch buffers, so create one instance per thread.
struct Stepper {
  std::string name;
  bool gaussian_free = false;
  std::function<void(const SdeSpec&, Vector& x, double t, double dt,
                     RngStream&)>
      step;
};

struct SpecViolation {
  std::size_t probe = 0;
  std::string what;
};

// Probes drift/diffusion at the given (x, t) points and reports wrong-length
// outputs, negative diffusion entries and evaluator exceptions. An empty
// report means the spec is valid at every probe.
std::vector<SpecViolation> validate_spec(
    const SdeSpec& spec, std::span<const std::pair<Vector, double>> probes);

// States with a non-finite coordinate or one beyond this magnitude count as
// diverged; the driver records the step and stops instead of crashing.
inline constexpr double kDivergenceLimit = 1e150;

struct PathOutcome {
  Vector x;  // final state, or last finite state when diverged
  std::int64_t steps_taken = 0;
  bool diverged = false;
  std::int64_t diverged_step = -1;
};

using Observer =
    std::function<void(std::int64_t step, double t, const Vector& x)>;

// Applies the stepper cfg.n_steps times from x0, advancing t by cfg.dt per
// step. The observer (optional) sees each accepted state (k, t_k, x_k) for
// k = 1..N; a diverged state is recorded but not observed.
PathOutcome simulate_path(const SdeSpec& spec, Stepper& stepper,
                          const Vector& x0, const StepConfig& cfg,
                          RngStream& rng, const Observer& observer = {});

}  // namespace lrwsde
