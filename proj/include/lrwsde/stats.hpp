// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lrwsde/sde.hpp"

namespace lrwsde {

// Streaming mean and centered second-moment sum (Welford), mergeable so
// parallel replicas can be combined. With a burn-in policy the first
// floor(burn_in_fraction * planned_samples) add() calls are discarded.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(Index dim, double burn_in_fraction = 0.0,
                             std::int64_t planned_samples = 0);

  void add(const Vector& x);
  void merge(const MomentAccumulator& other);

  Index dim() const { return mean_.size(); }
  std::int64_t count() const { return count_; }
  const Vector& mean() const { return mean_; }
  const Matrix& comoment() const { return comoment_; }
  // Unbiased covariance comoment/(count - 1); requires count >= 2.
  Matrix covariance() const;

 private:
  Vector mean_;
  Matrix comoment_;
  Vector delta_;  // scratch
  std::int64_t count_ = 0;
  std::int64_t skip_remaining_ = 0;
};

struct EmpiricalGaussian {
  Vector mean;
  Matrix cov;
  bool singular = false;  // zero-variance coordinate or non-PD covariance
};

// Mean and unbiased covariance of the samples after dropping the first
// floor(burn_in_fraction * n). Raises when fewer than dim + 1 samples
// remain.
EmpiricalGaussian empirical_gaussian(const std::vector<Vector>& samples,
                                     double burn_in_fraction);
EmpiricalGaussian empirical_gaussian(const MomentAccumulator& acc);

// KL[N(mean_hat, cov_hat) || N(mean_true, cov_true)], computed through
// Cholesky factorisations (no explicit inverse). Returns +inf when cov_hat
// is singular; raises when cov_true is not positive definite.
double gaussian_kl(const Vector& mean_hat, const Matrix& cov_hat,
                   const Vector& mean_true, const Matrix& cov_true);

// (time-average - true_value)^2 of a trajectory coordinate stream.
double ergodic_mean_mse(std::span<const double> values, double true_value);

struct WeakOrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  int n_used = 0;
  int n_excluded = 0;  // zero/negative error values dropped from the fit
};

// Least-squares slope of log error against log dt. Nonpositive errors are
// excluded; fewer than 3 usable points raises.
WeakOrderFit weak_order_estimate(
    std::span<const std::pair<double, double>> dt_and_error);

}  // namespace lrwsde
