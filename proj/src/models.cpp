// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/models.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace lrwsde {

OuModel make_ou(const OuParams& p) {
  const Index d = p.A.rows();
  if (p.A.cols() != d || p.b.size() != d)
    throw std::invalid_argument("make_ou: inconsistent dimensions");
  if (p.temperature <= 0.0)
    throw std::invalid_argument("make_ou: temperature must be > 0");
  const double scale = std::max(1.0, p.A.cwiseAbs().maxCoeff());
  if ((p.A - p.A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("make_ou: A is not symmetric");
  Eigen::LLT<Matrix> llt(p.A);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("make_ou: A is not positive definite");

  OuModel m;
  m.stationary_mean = llt.solve(p.b);
  m.stationary_cov =
      p.temperature * llt.solve(Matrix::Identity(d, d));
  const double sigma = std::sqrt(2.0 * p.temperature);
  auto shared = std::make_shared<OuParams>(p);
  m.spec.dim = d;
  m.spec.drift = [shared](const Vector& x, double, Vector& out) {
    out = shared->b;
    out.noalias() -= shared->A * x;
  };
  m.spec.diffusion = [sigma](const Vector&, double, Vector& out) {
    out.setConstant(sigma);
  };
  return m;
}

OuParams sample_ou_params(Index d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sample_ou_params: d must be >= 1");
  Matrix Z(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) Z(i, j) = standard_normal(rng);
  OuParams p;
  p.A.resize(d, d);
  // fill the upper triangle and mirror so A - A^T is exactly zero
  for (Index i = 0; i < d; ++i) {
    for (Index j = i; j < d; ++j) {
      const double v = Z.row(i).dot(Z.row(j)) + (i == j ? 1.0 : 0.0);
      p.A(i, j) = v;
      p.A(j, i) = v;
    }
  }
  p.b.resize(d);
  for (Index i = 0; i < d; ++i) p.b[i] = standard_normal(rng);
  return p;
}

std::int64_t sample_poisson(double lambda, RngStream& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::domain_error("sample_poisson: invalid rate");
  if (lambda == 0.0) return 0;
  const int chunks = static_cast<int>(std::ceil(lambda / 30.0));
  const double lam = lambda / chunks;
  const double p0 = std::exp(-lam);
  std::int64_t total = 0;
  for (int c = 0; c < chunks; ++c) {
    const double u = rng.uniform();
    double p = p0, cum = p0;
    std::int64_t k = 0;
    while (u > cum && k < 100000) {
      ++k;
      p *= lam / static_cast<double>(k);
      cum += p;
    }
    total += k;
  }
  return total;
}

double poisson_potential(const PoissonModelParams& p, const Vector& x) {
  if (x.size() != p.d + 1)
    throw std::invalid_argument("poisson_potential: wrong state length");
  double u = x[0] * x[0] / (2.0 * p.sigma1 * p.sigma1);
  for (Index i = 1; i <= p.d; ++i) {
    double ysum = 0.0;
    for (Index j = 0; j < p.J; ++j) ysum += static_cast<double>(p.y(i - 1, j));
    const double diff = x[i] - x[0];
    u += static_cast<double>(p.J) * std::exp(x[i]) - ysum * x[i] +
         0.5 * diff * diff;
  }
  return u;
}

PoissonModel make_poisson_model(Index d, Index J, double sigma1,
                                RngStream& rng) {
  if (d < 1 || J < 1)
    throw std::invalid_argument("make_poisson_model: d, J must be >= 1");
  if (sigma1 <= 0.0)
    throw std::invalid_argument("make_poisson_model: sigma1 must be > 0");

  PoissonModelParams params;
  params.d = d;
  params.J = J;
  params.sigma1 = sigma1;
  params.x_star.resize(d + 1);
  params.x_star[0] = 5.0;
  params.y.resize(d, J);
  constexpr double kLambdaCap = 1e12;
  for (Index i = 1; i <= d; ++i) {
    double xi = 0.0, lambda = 0.0;
    int tries = 0;
    do {
      if (++tries > 100)
        throw std::runtime_error(
            "make_poisson_model: could not draw a finite Poisson rate");
      xi = params.x_star[0] + standard_normal(rng);
      lambda = std::exp(xi);
    } while (!std::isfinite(lambda) || lambda > kLambdaCap);
    params.x_star[i] = xi;
    for (Index j = 0; j < J; ++j) params.y(i - 1, j) = sample_poisson(lambda, rng);
  }

  // row sums of y feed the gradient; precompute once
  Vector ysum(d);
  for (Index i = 0; i < d; ++i) {
    double s = 0.0;
    for (Index j = 0; j < J; ++j) s += static_cast<double>(params.y(i, j));
    ysum[i] = s;
  }

  PoissonModel model;
  model.params = params;
  auto shared = std::make_shared<PoissonModelParams>(params);
  auto shared_ysum = std::make_shared<Vector>(std::move(ysum));
  model.spec.dim = d + 1;
  model.spec.drift = [shared, shared_ysum](const Vector& x, double,
                                           Vector& out) {
    const auto& p = *shared;
    out.resize(p.d + 1);
    // drift = -grad U
    double g0 = x[0] / (p.sigma1 * p.sigma1);
    for (Index i = 1; i <= p.d; ++i) {
      const double diff = x[i] - x[0];
      g0 -= diff;
      out[i] = -(static_cast<double>(p.J) * std::exp(x[i]) -
                 (*shared_ysum)[i - 1] + diff);
    }
    out[0] = -g0;
  };
  const double sqrt2 = std::sqrt(2.0);
  model.spec.diffusion = [sqrt2](const Vector&, double, Vector& out) {
    out.setConstant(sqrt2);
  };
  return model;
}

FieldFn make_gaussian_flow(double sigma_data, const NoiseSchedule& ns) {
  if (sigma_data <= 0.0)
    throw std::invalid_argument("make_gaussian_flow: sigma_data must be > 0");
  if (!ns.sigma)
    throw std::invalid_argument("make_gaussian_flow: schedule lacks sigma");
  return [sigma_data, sigma = ns.sigma](const Vector& x, double t,
                                        Vector& out) {
    const double s = sigma(t);
    out = -x / (sigma_data * sigma_data + s * s);
  };
}

}  // namespace lrwsde
