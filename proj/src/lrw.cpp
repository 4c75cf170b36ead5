// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/lrw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace lrwsde {

namespace {

// Clip flags report truncation beyond rounding noise; at the exact
// boundary dx = sqrt(dt) sigma the comparison lands within a few ulps of
// equality and would otherwise flip on representation error alone.
constexpr double kClipReportTol = 0x1.0p-32;

}  // namespace

CoordProbs ternary_probs_coord(double f, double sigma, double dt, double dx) {
  CoordProbs cp;
  const double sigma2 = sigma * sigma;
  const double dx2 = dx * dx;
  // clip sigma^2 first so p- + p+ <= 1, then f against the clipped value.
  const bool truncate_sigma = sigma2 * dt > dx2;
  cp.clipped_sigma = sigma2 * dt > dx2 * (1.0 + kClipReportTol);
  const double sigma2c = truncate_sigma ? dx2 / dt : sigma2;
  const double f_bound = sigma2c / dx;
  cp.clipped_drift = std::fabs(f) > f_bound * (1.0 + kClipReportTol);
  const double fc = std::clamp(f, -f_bound, f_bound);
  const double a = 0.5 * dt / dx;
  const double s = sigma2c / dx;
  cp.p_plus = a * (fc + s);
  cp.p_minus = a * (s - fc);
  // roundoff guard: keep the invariant p- + p+ <= 1 exact at the boundary
  cp.p_plus = std::min(cp.p_plus, 1.0);
  cp.p_minus = std::min(cp.p_minus, 1.0 - cp.p_plus);
  return cp;
}

TernaryProbs ternary_probs(const SdeSpec& spec, const Vector& x, double t,
                           double dt, const Vector& dx) {
  if (dt <= 0.0) throw std::invalid_argument("ternary_probs: dt must be > 0");
  if ((dx.array() <= 0.0).any())
    throw std::invalid_argument("ternary_probs: dx must be positive");
  Vector f(spec.dim), sig(spec.dim);
  spec.drift(x, t, f);
  spec.diffusion(x, t, sig);
  TernaryProbs tp;
  tp.p_minus.resize(spec.dim);
  tp.p_plus.resize(spec.dim);
  tp.clipped_sigma.resize(spec.dim);
  tp.clipped_drift.resize(spec.dim);
  for (Index i = 0; i < spec.dim; ++i) {
    const CoordProbs cp = ternary_probs_coord(f[i], sig[i], dt, dx[i]);
    tp.p_minus[i] = cp.p_minus;
    tp.p_plus[i] = cp.p_plus;
    tp.clipped_sigma[i] = cp.clipped_sigma;
    tp.clipped_drift[i] = cp.clipped_drift;
  }
  return tp;
}

DxRange allowable_dx_range(const Vector& f_abs, const Vector& sigma,
                           double dt) {
  if (dt <= 0.0)
    throw std::invalid_argument("allowable_dx_range: dt must be > 0");
  const double sqrt_dt = std::sqrt(dt);
  DxRange r;
  r.lo.resize(sigma.size());
  r.hi.resize(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i) {
    const double fa = std::fabs(f_abs[i]);
    r.lo[i] = sqrt_dt * sigma[i];
    r.hi[i] = fa == 0.0 ? std::numeric_limits<double>::infinity()
                        : sigma[i] * sigma[i] / fa;
  }
  return r;
}

BoolArray check_feasibility(const Vector& f_abs, const Vector& sigma,
                            double dt) {
  if (dt <= 0.0)
    throw std::invalid_argument("check_feasibility: dt must be > 0");
  BoolArray ok(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i)
    ok[i] = sigma[i] * sigma[i] >= dt * f_abs[i] * f_abs[i];
  return ok;
}

Vector rule_of_thumb_dx(double dt, const Vector& sigma_max) {
  if (dt <= 0.0)
    throw std::invalid_argument("rule_of_thumb_dx: dt must be > 0");
  return std::sqrt(dt) * sigma_max;
}

double rule_of_thumb_dx(double dt, double sigma_max) {
  if (dt <= 0.0)
    throw std::invalid_argument("rule_of_thumb_dx: dt must be > 0");
  return std::sqrt(dt) * sigma_max;
}

int ternary_increment(double p_minus, double p_plus, double eta) {
  if (eta < p_minus) return -1;
  if (eta >= 1.0 - p_plus) return +1;
  return 0;
}

namespace {

// Shared core of the real-space and lattice steppers: draws one uniform per
// coordinate (in order), returning the increments in {-1,0,+1}^d.
void lrw_increments(const Vector& f, const Vector& sig, double dt,
                    const Vector& dx, RngStream& rng, LrwClipStats* stats,
                    Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>& incr) {
  const Index d = f.size();
  for (Index i = 0; i < d; ++i) {
    if (!(dx[i] > 0.0))
      throw std::invalid_argument("lrw_step: dx must be positive");
    const CoordProbs cp = ternary_probs_coord(f[i], sig[i], dt, dx[i]);
    if (stats) {
      stats->clipped_sigma += cp.clipped_sigma;
      stats->clipped_drift += cp.clipped_drift;
      ++stats->coordinate_steps;
    }
    incr[i] = ternary_increment(cp.p_minus, cp.p_plus, rng.uniform());
  }
}

}  // namespace

Vector lrw_step(const SdeSpec& spec, const Vector& x, double t, double dt,
                const Vector& dx, RngStream& rng) {
  if (dt <= 0.0) throw std::invalid_argument("lrw_step: dt must be > 0");
  Vector f(spec.dim), sig(spec.dim);
  spec.drift(x, t, f);
  spec.diffusion(x, t, sig);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> incr(spec.dim);
  lrw_increments(f, sig, dt, dx, rng, nullptr, incr);
  Vector out = x;
  for (Index i = 0; i < spec.dim; ++i)
    out[i] += static_cast<double>(incr[i]) * dx[i];
  return out;
}

void lrw_step_lattice(const SdeSpec& spec, LatticeState& ls, double t,
                      double dt, RngStream& rng) {
  if (dt <= 0.0)
    throw std::invalid_argument("lrw_step_lattice: dt must be > 0");
  const Vector xv = ls.x();
  Vector f(spec.dim), sig(spec.dim);
  spec.drift(xv, t, f);
  spec.diffusion(xv, t, sig);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> incr(spec.dim);
  lrw_increments(f, sig, dt, ls.dx, rng, nullptr, incr);
  ls.z += incr;
}

double LrwClipStats::clipped_fraction() const {
  if (coordinate_steps == 0) return 0.0;
  return static_cast<double>(clipped_sigma + clipped_drift) /
         static_cast<double>(coordinate_steps);
}

Stepper make_lrw_stepper(DxSchedule dx_schedule,
                         std::shared_ptr<LrwClipStats> stats) {
  if (dx_schedule.empty())
    throw std::invalid_argument("make_lrw_stepper: empty dx schedule");
  struct Scratch {
    Vector f, sig, dx;
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> incr;
  };
  auto scratch = std::make_shared<Scratch>();
  Stepper st;
  st.name = "lrw";
  st.gaussian_free = true;
  st.step = [sched = std::move(dx_schedule), stats,
             scratch](const SdeSpec& spec, Vector& x, double t, double dt,
                      RngStream& rng) {
    Scratch& sc = *scratch;
    sc.f.resize(spec.dim);
    sc.sig.resize(spec.dim);
    sc.dx.resize(spec.dim);
    sc.incr.resize(spec.dim);
    sched(t, sc.dx);
    spec.drift(x, t, sc.f);
    spec.diffusion(x, t, sc.sig);
    lrw_increments(sc.f, sc.sig, dt, sc.dx, rng, stats.get(), sc.incr);
    for (Index i = 0; i < spec.dim; ++i)
      x[i] += static_cast<double>(sc.incr[i]) * sc.dx[i];
  };
  return st;
}

}  // namespace lrwsde
