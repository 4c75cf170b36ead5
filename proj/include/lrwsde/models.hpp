// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "lrwsde/sde.hpp"
#include "lrwsde/transforms.hpp"

namespace lrwsde {

// Multivariate OU process dx = -(A x - b) dt + sqrt(2 T) dw with symmetric
// positive-definite A; stationary law N(A^-1 b, T A^-1).
struct OuParams {
  Matrix A;
  Vector b;
  double temperature = 0.5;
};

struct OuModel {
  SdeSpec spec;
  Vector stationary_mean;
  Matrix stationary_cov;
};

// Raises if A is not symmetric (within 1e-12 relative) positive definite or
// temperature <= 0.
OuModel make_ou(const OuParams& p);

// A = Z Z^T + I with Z_ij ~ N(0,1) (symmetry constructed exactly),
// b ~ N(0, I). Temperature is left at the struct default for the caller.
OuParams sample_ou_params(Index d, RngStream& rng);

// Bayesian Poisson random-effects model. Coordinate 0 is the hierarchical
// mean (the interest parameter, prior scale sigma1); coordinates 1..d are
// the effects with J Poisson observations each.
struct PoissonModelParams {
  Index d = 51;
  Index J = 5;
  double sigma1 = 10.0;
  Vector x_star;  // length d+1, x_star[0] = 5 and effects ~ N(5, 1)
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> y;  // d x J
};

struct PoissonModel {
  PoissonModelParams params;
  SdeSpec spec;  // overdamped Langevin: drift = -grad U, diffusion sqrt(2)
};

PoissonModel make_poisson_model(Index d, Index J, double sigma1,
                                RngStream& rng);

// Potential U(x); exposed so gradients can be checked against finite
// differences.
double poisson_potential(const PoissonModelParams& p, const Vector& x);

// Poisson(lambda) count via inversion from uniforms. Large lambda is split
// into ceil(lambda/30) independent chunks so the inversion never underflows;
// exact in distribution and deterministic given the stream.
std::int64_t sample_poisson(double lambda, RngStream& rng);

// Score of the Gaussian-data flow: s(x, t) = -x / (sigma_data^2 + sigma(t)^2),
// the analytic oracle for flow-model simulations.
FieldFn make_gaussian_flow(double sigma_data, const NoiseSchedule& ns);

}  // namespace lrwsde
