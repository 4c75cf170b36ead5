// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/baselines.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace lrwsde {

namespace {

void em_step_inplace(const SdeSpec& spec, Vector& x, double t, double dt,
                     RngStream& rng, Vector& f, Vector& sig) {
  spec.drift(x, t, f);
  spec.diffusion(x, t, sig);
  const double sqrt_dt = std::sqrt(dt);
  for (Index i = 0; i < spec.dim; ++i)
    x[i] += dt * f[i] + sqrt_dt * sig[i] * standard_normal(rng);
}

void two_point_step_inplace(const SdeSpec& spec, Vector& x, double t,
                            double dt, RngStream& rng, Vector& f,
                            Vector& sig) {
  spec.drift(x, t, f);
  spec.diffusion(x, t, sig);
  const double sqrt_dt = std::sqrt(dt);
  for (Index i = 0; i < spec.dim; ++i) {
    const double xi = rng.uniform() < 0.5 ? -1.0 : 1.0;
    x[i] += dt * f[i] + sqrt_dt * sig[i] * xi;
  }
}

}  // namespace

Vector em_step(const SdeSpec& spec, const Vector& x, double t, double dt,
               RngStream& rng) {
  if (dt <= 0.0) throw std::invalid_argument("em_step: dt must be > 0");
  Vector out = x, f(spec.dim), sig(spec.dim);
  em_step_inplace(spec, out, t, dt, rng, f, sig);
  return out;
}

Vector two_point_step(const SdeSpec& spec, const Vector& x, double t,
                      double dt, RngStream& rng) {
  if (dt <= 0.0) throw std::invalid_argument("two_point_step: dt must be > 0");
  Vector out = x, f(spec.dim), sig(spec.dim);
  two_point_step_inplace(spec, out, t, dt, rng, f, sig);
  return out;
}

Stepper make_em_stepper() {
  auto scratch = std::make_shared<std::pair<Vector, Vector>>();
  Stepper st;
  st.name = "em";
  st.gaussian_free = false;
  st.step = [scratch](const SdeSpec& spec, Vector& x, double t, double dt,
                      RngStream& rng) {
    scratch->first.resize(spec.dim);
    scratch->second.resize(spec.dim);
    em_step_inplace(spec, x, t, dt, rng, scratch->first, scratch->second);
  };
  return st;
}

Stepper make_two_point_stepper() {
  auto scratch = std::make_shared<std::pair<Vector, Vector>>();
  Stepper st;
  st.name = "two_point";
  st.gaussian_free = true;
  st.step = [scratch](const SdeSpec& spec, Vector& x, double t, double dt,
                      RngStream& rng) {
    scratch->first.resize(spec.dim);
    scratch->second.resize(spec.dim);
    two_point_step_inplace(spec, x, t, dt, rng, scratch->first,
                           scratch->second);
  };
  return st;
}

}  // namespace lrwsde
