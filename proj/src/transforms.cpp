// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/transforms.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

namespace lrwsde {

NoiseSchedule with_alpha_multiplier(NoiseSchedule ns, double multiplier) {
  if (multiplier < 0.0)
    throw std::invalid_argument("with_alpha_multiplier: multiplier must be >= 0");
  ns.alpha = [sigma = ns.sigma, sigma_dot = ns.sigma_dot,
              multiplier](double t) {
    return multiplier * sigma_dot(t) * sigma(t);
  };
  return ns;
}

SdeSpec flow_to_sde(FieldFn score, const NoiseSchedule& ns, Index dim) {
  if (!ns.sigma || !ns.sigma_dot || !ns.alpha)
    throw std::invalid_argument("flow_to_sde: incomplete noise schedule");
  auto alpha_at = [alpha = ns.alpha](double t) {
    const double a = alpha(t);
    if (a < 0.0)
      throw std::domain_error("flow_to_sde: alpha(t) < 0");
    return a;
  };
  SdeSpec spec;
  spec.dim = dim;
  spec.drift = [score, sigma = ns.sigma, sigma_dot = ns.sigma_dot, alpha_at](
                   const Vector& x, double t, Vector& out) {
    score(x, t, out);
    out *= sigma_dot(t) * sigma(t) + alpha_at(t);
  };
  spec.diffusion = [alpha_at](const Vector&, double t, Vector& out) {
    out.setConstant(std::sqrt(2.0 * alpha_at(t)));
  };
  return spec;
}

FieldFn velocity_to_score(FieldFn velocity, const NoiseSchedule& ns) {
  if (!ns.sigma || !ns.sigma_dot)
    throw std::invalid_argument("velocity_to_score: incomplete noise schedule");
  return [velocity = std::move(velocity), sigma = ns.sigma,
          sigma_dot = ns.sigma_dot](const Vector& x, double t, Vector& out) {
    const double denom = sigma_dot(t) * sigma(t);
    if (denom == 0.0)
      throw std::domain_error(
          "velocity_to_score: sigma_dot(t) * sigma(t) = 0, conversion singular");
    velocity(x, 1.0 - t, out);
    out /= -denom;
  };
}

TimeDiffusion TimeDiffusion::diagonal(
    std::function<void(double, Vector&)> sigma,
    std::function<void(double, Vector&)> sigma_dot, double kappa) {
  if (kappa <= 0.0)
    throw std::invalid_argument("TimeDiffusion: kappa must be > 0");
  TimeDiffusion td;
  td.sigma_diag = std::move(sigma);
  td.sigma_diag_dot = std::move(sigma_dot);
  td.kappa = kappa;
  return td;
}

TimeDiffusion TimeDiffusion::dense_pair(
    std::function<Matrix(double)> sigma, std::function<Matrix(double)> sigma_inv,
    std::function<Matrix(double)> sigma_inv_dot, double kappa) {
  if (kappa <= 0.0)
    throw std::invalid_argument("TimeDiffusion: kappa must be > 0");
  TimeDiffusion td;
  td.sigma_mat = std::move(sigma);
  td.sigma_inv = std::move(sigma_inv);
  td.sigma_inv_dot = std::move(sigma_inv_dot);
  td.kappa = kappa;
  return td;
}

namespace {

void check_diagonal_invertible(const TimeDiffusion& td, Index dim,
                               std::span<const double> probe_times) {
  Vector s(dim);
  for (double t : probe_times) {
    td.sigma_diag(t, s);
    if ((s.array() <= 0.0).any())
      throw std::invalid_argument(
          "lamperti_transform: sigma(t) not invertible at probe time");
  }
}

void check_dense_inverse(const TimeDiffusion& td, Index dim,
                         std::span<const double> probe_times) {
  const Matrix eye = Matrix::Identity(dim, dim);
  for (double t : probe_times) {
    const Matrix prod = td.sigma_mat(t) * td.sigma_inv(t);
    if ((prod - eye).cwiseAbs().maxCoeff() > 1e-8)
      throw std::invalid_argument(
          "lamperti_transform: supplied inverse fails sigma * sigma^-1 = I "
          "at probe time");
  }
}

}  // namespace

LampertiResult lamperti_transform(const SdeSpec& spec, const TimeDiffusion& td,
                                  std::span<const double> probe_times) {
  if (probe_times.empty())
    throw std::invalid_argument("lamperti_transform: no probe times");
  const Index dim = spec.dim;
  const double kappa = td.kappa;
  LampertiResult res;
  res.z_spec.dim = dim;
  res.z_spec.diffusion = [kappa](const Vector&, double, Vector& out) {
    out.setConstant(kappa);
  };

  if (td.dense()) {
    if (!td.sigma_mat || !td.sigma_inv_dot)
      throw std::invalid_argument(
          "lamperti_transform: dense case needs sigma, sigma^-1 and its "
          "derivative");
    check_dense_inverse(td, dim, probe_times);
    res.z_spec.drift = [drift = spec.drift, sigma = td.sigma_mat,
                        sigma_inv = td.sigma_inv,
                        sigma_inv_dot = td.sigma_inv_dot, kappa,
                        buf = std::make_shared<Vector>()](
                           const Vector& z, double t, Vector& out) {
      const Matrix sig = sigma(t);
      buf->noalias() = sig * z / kappa;  // x view
      Vector fx(z.size());
      drift(*buf, t, fx);
      out.noalias() = sigma_inv_dot(t) * (sig * z);
      out.noalias() += kappa * (sigma_inv(t) * fx);
    };
    res.x_of_z = [sigma = td.sigma_mat, kappa](const Vector& z, double t) {
      return Vector((sigma(t) * z) / kappa);
    };
    res.z_of_x = [sigma_inv = td.sigma_inv, kappa](const Vector& x, double t) {
      return Vector(kappa * (sigma_inv(t) * x));
    };
    return res;
  }

  if (!td.sigma_diag || !td.sigma_diag_dot)
    throw std::invalid_argument(
        "lamperti_transform: diagonal case needs sigma and its derivative");
  check_diagonal_invertible(td, dim, probe_times);
  struct DiagBufs {
    Vector s, sdot, x, fx;
  };
  auto bufs = std::make_shared<DiagBufs>();
  res.z_spec.drift = [drift = spec.drift, sigma = td.sigma_diag,
                      sigma_dot = td.sigma_diag_dot, kappa,
                      bufs](const Vector& z, double t, Vector& out) {
    bufs->s.resize(z.size());
    bufs->sdot.resize(z.size());
    bufs->fx.resize(z.size());
    sigma(t, bufs->s);
    sigma_dot(t, bufs->sdot);
    bufs->x = bufs->s.cwiseProduct(z) / kappa;
    drift(bufs->x, t, bufs->fx);
    // d/dt(sigma^-1) * sigma = -sigma_dot / sigma, elementwise
    out = -bufs->sdot.cwiseQuotient(bufs->s).cwiseProduct(z) +
          kappa * bufs->fx.cwiseQuotient(bufs->s);
  };
  res.x_of_z = [sigma = td.sigma_diag, kappa](const Vector& z, double t) {
    Vector s(z.size());
    sigma(t, s);
    return Vector(s.cwiseProduct(z) / kappa);
  };
  res.z_of_x = [sigma = td.sigma_diag, kappa](const Vector& x, double t) {
    Vector s(x.size());
    sigma(t, s);
    return Vector(kappa * x.cwiseQuotient(s));
  };
  return res;
}

}  // namespace lrwsde
