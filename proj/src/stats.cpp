// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/stats.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lrwsde {

MomentAccumulator::MomentAccumulator(Index dim, double burn_in_fraction,
                                     std::int64_t planned_samples) {
  if (dim < 1) throw std::invalid_argument("MomentAccumulator: dim must be >= 1");
  if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
    throw std::invalid_argument(
        "MomentAccumulator: burn_in_fraction must be in [0, 1)");
  mean_ = Vector::Zero(dim);
  comoment_ = Matrix::Zero(dim, dim);
  delta_.resize(dim);
  skip_remaining_ = static_cast<std::int64_t>(
      std::floor(burn_in_fraction * static_cast<double>(planned_samples)));
}

void MomentAccumulator::add(const Vector& x) {
  if (x.size() != mean_.size())
    throw std::invalid_argument("MomentAccumulator: dimension mismatch");
  if (skip_remaining_ > 0) {
    --skip_remaining_;
    return;
  }
  ++count_;
  const double n = static_cast<double>(count_);
  delta_ = x - mean_;
  mean_ += delta_ / n;
  // (x - mean_old)(x - mean_new)^T = ((n-1)/n) delta delta^T, which keeps
  // the accumulated comoment exactly symmetric
  comoment_ += (delta_ * delta_.transpose()) * ((n - 1.0) / n);
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.mean_.size() != mean_.size())
    throw std::invalid_argument("MomentAccumulator: dimension mismatch");
  if (other.count_ == 0) return;
  if (count_ == 0) {
    mean_ = other.mean_;
    comoment_ = other.comoment_;
    count_ = other.count_;
    return;
  }
  const double n1 = static_cast<double>(count_);
  const double n2 = static_cast<double>(other.count_);
  const double n = n1 + n2;
  const Vector delta = other.mean_ - mean_;
  mean_ += delta * (n2 / n);
  comoment_ += other.comoment_;
  comoment_ += (delta * delta.transpose()) * (n1 * n2 / n);
  count_ += other.count_;
}

Matrix MomentAccumulator::covariance() const {
  if (count_ < 2)
    throw std::invalid_argument("MomentAccumulator: need at least 2 samples");
  return comoment_ / static_cast<double>(count_ - 1);
}

namespace {

EmpiricalGaussian finish(const Vector& mean, const Matrix& cov) {
  EmpiricalGaussian eg;
  eg.mean = mean;
  eg.cov = cov;
  eg.singular = (cov.diagonal().array() <= 0.0).any();
  if (!eg.singular) {
    Eigen::LLT<Matrix> llt(cov);
    eg.singular = llt.info() != Eigen::Success;
  }
  return eg;
}

}  // namespace

EmpiricalGaussian empirical_gaussian(const std::vector<Vector>& samples,
                                     double burn_in_fraction) {
  if (burn_in_fraction < 0.0 || burn_in_fraction >= 1.0)
    throw std::invalid_argument(
        "empirical_gaussian: burn_in_fraction must be in [0, 1)");
  if (samples.empty())
    throw std::invalid_argument("empirical_gaussian: no samples");
  const Index d = samples.front().size();
  const auto skip = static_cast<std::size_t>(std::floor(
      burn_in_fraction * static_cast<double>(samples.size())));
  if (samples.size() - skip < static_cast<std::size_t>(d) + 1)
    throw std::invalid_argument(
        "empirical_gaussian: fewer than dim + 1 samples after burn-in");
  MomentAccumulator acc(d);
  for (std::size_t i = skip; i < samples.size(); ++i) acc.add(samples[i]);
  return finish(acc.mean(), acc.covariance());
}

EmpiricalGaussian empirical_gaussian(const MomentAccumulator& acc) {
  if (acc.count() < acc.dim() + 1)
    throw std::invalid_argument(
        "empirical_gaussian: fewer than dim + 1 samples accumulated");
  return finish(acc.mean(), acc.covariance());
}

double gaussian_kl(const Vector& mean_hat, const Matrix& cov_hat,
                   const Vector& mean_true, const Matrix& cov_true) {
  const Index d = mean_hat.size();
  if (mean_true.size() != d || cov_hat.rows() != d || cov_hat.cols() != d ||
      cov_true.rows() != d || cov_true.cols() != d)
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  Eigen::LLT<Matrix> llt_true(cov_true);
  if (llt_true.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_kl: true covariance not SPD");
  Eigen::LLT<Matrix> llt_hat(cov_hat);
  if (llt_hat.info() != Eigen::Success)
    return std::numeric_limits<double>::infinity();

  double logdet_true = 0.0, logdet_hat = 0.0;
  for (Index i = 0; i < d; ++i) {
    logdet_true += std::log(llt_true.matrixL()(i, i));
    logdet_hat += std::log(llt_hat.matrixL()(i, i));
  }
  logdet_true *= 2.0;
  logdet_hat *= 2.0;

  const double trace_term = llt_true.solve(cov_hat).trace();
  const Vector diff = mean_true - mean_hat;
  const double quad = diff.dot(llt_true.solve(diff));
  return 0.5 * (trace_term + quad - static_cast<double>(d) + logdet_true -
                logdet_hat);
}

double ergodic_mean_mse(std::span<const double> values, double true_value) {
  if (values.empty())
    throw std::invalid_argument("ergodic_mean_mse: empty stream");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double err = sum / static_cast<double>(values.size()) - true_value;
  return err * err;
}

WeakOrderFit weak_order_estimate(
    std::span<const std::pair<double, double>> dt_and_error) {
  WeakOrderFit fit;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [dt, err] : dt_and_error) {
    if (dt <= 0.0)
      throw std::invalid_argument("weak_order_estimate: dt must be > 0");
    if (err > 0.0) {
      pts.emplace_back(std::log(dt), std::log(err));
    } else {
      ++fit.n_excluded;
    }
  }
  if (pts.size() < 3)
    throw std::invalid_argument(
        "weak_order_estimate: fewer than 3 usable grid points");
  double su = 0.0, sv = 0.0;
  for (const auto& [u, v] : pts) {
    su += u;
    sv += v;
  }
  const double n = static_cast<double>(pts.size());
  const double ubar = su / n, vbar = sv / n;
  double suu = 0.0, suv = 0.0;
  for (const auto& [u, v] : pts) {
    suu += (u - ubar) * (u - ubar);
    suv += (u - ubar) * (v - vbar);
  }
  fit.slope = suv / suu;
  fit.intercept = vbar - fit.slope * ubar;
  fit.n_used = static_cast<int>(pts.size());
  return fit;
}

}  // namespace lrwsde
