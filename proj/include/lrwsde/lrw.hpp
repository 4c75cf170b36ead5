// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>

#include "lrwsde/sde.hpp"

namespace lrwsde {

// Per-coordinate ternary probabilities
//   p+- = (dt / 2 dx) (+-f + sigma^2 / dx)
// made valid by clipping: sigma^2 is truncated so dt sigma^2 / dx^2 <= 1
// (keeps p- + p+ <= 1), then f is truncated so |f| <= sigma_c^2 / dx (keeps
// p-, p+ >= 0). A coordinate with sigma = 0 ends up frozen (p- = p+ = 0)
// with the drift-clip flag set. The flags report truncation beyond a
// relative 2^-32 so that runs sitting exactly on the dx = sqrt(dt) sigma
// boundary do not flag representation noise.
struct CoordProbs {
  double p_minus = 0.0;
  double p_plus = 0.0;
  bool clipped_sigma = false;
  bool clipped_drift = false;
};

CoordProbs ternary_probs_coord(double f, double sigma, double dt, double dx);

struct TernaryProbs {
  Vector p_minus;
  Vector p_plus;
  BoolArray clipped_sigma;
  BoolArray clipped_drift;

  bool any_clipped() const {
    return clipped_sigma.any() || clipped_drift.any();
  }
};

TernaryProbs ternary_probs(const SdeSpec& spec, const Vector& x, double t,
                           double dt, const Vector& dx);

// Valid dx interval [sqrt(dt) sigma, sigma^2/|f|] per coordinate. The upper
// bound is +inf where f = 0; the interval is empty (lo > hi) where the
// feasibility condition fails.
struct DxRange {
  Vector lo;
  Vector hi;
};
DxRange allowable_dx_range(const Vector& f_abs, const Vector& sigma,
                           double dt);

// true where sigma^2 >= dt f^2, i.e. where some valid dx exists.
BoolArray check_feasibility(const Vector& f_abs, const Vector& sigma,
                            double dt);

// dx = sqrt(dt) * sigma_max. With sigma_max an upper bound on sigma(x,t)
// this meets the lower end of the allowable range everywhere.
Vector rule_of_thumb_dx(double dt, const Vector& sigma_max);
double rule_of_thumb_dx(double dt, double sigma_max);

// Threshold sampling of the ternary increment from one uniform:
//   -1 for eta < p-,  +1 for eta >= 1 - p+,  0 in between.
int ternary_increment(double p_minus, double p_plus, double eta);

// One LRW step. Consumes exactly d uniforms (one per coordinate, in order)
// and never touches the normal sampler.
Vector lrw_step(const SdeSpec& spec, const Vector& x, double t, double dt,
                const Vector& dx, RngStream& rng);

// Integer-lattice view of an LRW trajectory: x = origin + dx .* z. Requires
// a constant dx; the origin offset covers starts that are off the raw
// dx * z lattice.
struct LatticeState {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> z;
  Vector origin;
  Vector dx;

  Vector x() const { return origin + dx.cwiseProduct(z.cast<double>()); }
};

// Advances z by an increment in {-1, 0, +1}^d with probabilities evaluated
// at the real-space view. Under common uniforms this reproduces lrw_step
// exactly up to floating-point representation of the view.
void lrw_step_lattice(const SdeSpec& spec, LatticeState& ls, double t,
                      double dt, RngStream& rng);

struct LrwClipStats {
  std::int64_t clipped_sigma = 0;
  std::int64_t clipped_drift = 0;
  std::int64_t coordinate_steps = 0;

  double clipped_fraction() const;
};

// Stepper applying lrw_step with dx = schedule(t). gaussian_free by
// construction. Clip counts are accumulated into stats when provided.
Stepper make_lrw_stepper(DxSchedule dx_schedule,
                         std::shared_ptr<LrwClipStats> stats = nullptr);

}  // namespace lrwsde
