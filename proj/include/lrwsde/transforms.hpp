// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>

#include "lrwsde/sde.hpp"

namespace lrwsde {

// Noise schedule for flow models simulated on t in [0, 1] (denoising
// direction, dt > 0).
//
// sigma_dot is the derivative of the noise level along the *noising*
// direction, i.e. sigma_dot(t) = -d sigma/dt for a schedule that decays
// over the run. This keeps sigma_dot * sigma >= 0, which the Langevin
// level alpha(t) = a * sigma_dot(t) * sigma(t) and the marginal-preserving
// property both rely on.
struct NoiseSchedule {
  std::function<double(double)> sigma;      // noise level, > 0
  std::function<double(double)> sigma_dot;  // noising-direction derivative
  std::function<double(double)> alpha;      // Langevin level, >= 0
};

// Copy of ns with alpha(t) = multiplier * sigma_dot(t) * sigma(t).
NoiseSchedule with_alpha_multiplier(NoiseSchedule ns, double multiplier);

// SDE for a score field under the schedule:
//   drift = (sigma_dot sigma + alpha) * score,  diffusion = sqrt(2 alpha).
// alpha(t) < 0 raises at evaluation time.
SdeSpec flow_to_sde(FieldFn score, const NoiseSchedule& ns, Index dim);

// score(x, t) = -u(x, 1 - t) / (sigma_dot(t) sigma(t)); raises where the
// denominator vanishes.
FieldFn velocity_to_score(FieldFn velocity, const NoiseSchedule& ns);

// Time-varying, state-independent diffusion for the Lamperti rescaling
// z = kappa sigma(t)^-1 x. Diagonal case: supply sigma and its derivative
// (the inverse is formed analytically). Dense case: supply sigma, its
// inverse and the derivative of the inverse; no numerical differentiation
// happens inside the transform.
struct TimeDiffusion {
  std::function<void(double t, Vector& out)> sigma_diag;
  std::function<void(double t, Vector& out)> sigma_diag_dot;
  std::function<Matrix(double t)> sigma_mat;
  std::function<Matrix(double t)> sigma_inv;
  std::function<Matrix(double t)> sigma_inv_dot;
  double kappa = 1.0;

  bool dense() const { return static_cast<bool>(sigma_inv); }

  static TimeDiffusion diagonal(std::function<void(double, Vector&)> sigma,
                                std::function<void(double, Vector&)> sigma_dot,
                                double kappa = 1.0);
  static TimeDiffusion dense_pair(std::function<Matrix(double)> sigma,
                                  std::function<Matrix(double)> sigma_inv,
                                  std::function<Matrix(double)> sigma_inv_dot,
                                  double kappa = 1.0);
};

struct LampertiResult {
  SdeSpec z_spec;  // drift in z, constant diagonal diffusion kappa
  std::function<Vector(const Vector& z, double t)> x_of_z;
  std::function<Vector(const Vector& x, double t)> z_of_x;
};

// Rewrites dx = f dt + sigma(t) dw as
//   dz = [d/dt(sigma^-1) sigma z + kappa sigma^-1 f(sigma z / kappa, t)] dt
//        + kappa dw.
// Validates invertibility (diagonal) or sigma * sigma^-1 = I within 1e-8
// (dense) at the probe times.
LampertiResult lamperti_transform(const SdeSpec& spec, const TimeDiffusion& td,
                                  std::span<const double> probe_times);

}  // namespace lrwsde
