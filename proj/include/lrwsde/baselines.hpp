// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lrwsde/sde.hpp"

namespace lrwsde {

// Euler-Maruyama: x + dt f + sqrt(dt) sigma .* xi, xi ~ N(0, I), drawing
// exactly d normals per step.
Vector em_step(const SdeSpec& spec, const Vector& x, double t, double dt,
               RngStream& rng);

// Two-point scheme: the Gaussian in Euler-Maruyama replaced by xi in
// {-1, +1}, equiprobable, one uniform per coordinate (eta < 0.5 -> -1).
Vector two_point_step(const SdeSpec& spec, const Vector& x, double t,
                      double dt, RngStream& rng);

Stepper make_em_stepper();
Stepper make_two_point_stepper();

}  // namespace lrwsde
