// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "lrwsde/baselines.hpp"
#include "lrwsde/lrw.hpp"
#include "lrwsde/models.hpp"
#include "lrwsde/sde.hpp"
#include "test_util.hpp"

using namespace lrwsde;
using testutil::ulps_between;

namespace {

// Independent scalar re-implementation of the ternary probabilities in
// extended precision (the oracle for the implementation under test).
void oracle_probs(double f, double sigma, double dt, double dx,
                  long double& pm, long double& pp) {
  long double s2 = static_cast<long double>(sigma) * sigma;
  const long double dx2 = static_cast<long double>(dx) * dx;
  if (s2 * dt > dx2) s2 = dx2 / dt;
  const long double fb = s2 / dx;
  long double fc = f;
  if (fc > fb) fc = fb;
  if (fc < -fb) fc = -fb;
  const long double a = 0.5L * dt / dx;
  pp = a * (fc + s2 / dx);
  pm = a * (s2 / dx - fc);
}

SdeSpec constant_spec(double f, double sigma) {
  SdeSpec spec;
  spec.dim = 1;
  spec.drift = [f](const Vector&, double, Vector& out) { out.setConstant(f); };
  spec.diffusion = [sigma](const Vector&, double, Vector& out) {
    out.setConstant(sigma);
  };
  return spec;
}

SdeSpec ou1d_spec() {
  OuParams p;
  p.A = Matrix::Constant(1, 1, 1.0);
  p.b = Vector::Zero(1);
  p.temperature = 0.5;
  return make_ou(p).spec;
}

}  // namespace

TEST_CASE("ternary probabilities: worked examples") {
  // zero drift at dx = sqrt(dt) sigma: p- = p+ = 1/2, nothing clipped
  CoordProbs cp = ternary_probs_coord(0.0, 1.0, 0.01, 0.1);
  CHECK(ulps_between(cp.p_minus, 0.5) <= 4);
  CHECK(ulps_between(cp.p_plus, 0.5) <= 4);
  CHECK(!cp.clipped_sigma);
  CHECK(!cp.clipped_drift);

  cp = ternary_probs_coord(1.0, 1.0, 0.01, 0.1);
  CHECK(ulps_between(cp.p_plus, 0.55) <= 4);
  CHECK(ulps_between(cp.p_minus, 0.45) <= 4);
  CHECK(!cp.clipped_sigma);
  CHECK(!cp.clipped_drift);

  cp = ternary_probs_coord(1.0, 1.0, 0.01, 0.2);
  CHECK(ulps_between(cp.p_plus, 0.15) <= 4);
  CHECK(ulps_between(cp.p_minus, 0.10) <= 4);

  // drift clipped to sigma^2/dx = 10: p+ = 1, p- = 0
  cp = ternary_probs_coord(100.0, 1.0, 0.01, 0.1);
  CHECK(cp.clipped_drift);
  CHECK(!cp.clipped_sigma);
  CHECK(ulps_between(cp.p_plus, 1.0) <= 4);
  CHECK(cp.p_minus == 0.0);

  // sigma^2 clipped to dx^2/dt = 0.25
  cp = ternary_probs_coord(0.0, 1.0, 0.01, 0.05);
  CHECK(cp.clipped_sigma);
  CHECK(!cp.clipped_drift);
  CHECK(ulps_between(cp.p_plus, 0.5) <= 4);
  CHECK(ulps_between(cp.p_minus, 0.5) <= 4);
}

TEST_CASE("ternary probabilities agree with the extended-precision oracle") {
  RngStream rng(2024);
  for (int i = 0; i < 5000; ++i) {
    const double f = (rng.uniform() - 0.5) * 40.0;
    const double sigma = 0.05 + rng.uniform() * 4.0;
    const double dt = std::pow(10.0, -4.0 + 3.5 * rng.uniform());
    const double dx = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
    long double pm, pp;
    oracle_probs(f, sigma, dt, dx, pm, pp);
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    CHECK(std::fabs(cp.p_plus - static_cast<double>(pp)) <=
          8e-16 * std::max(1.0, static_cast<double>(pp)));
    CHECK(std::fabs(cp.p_minus - static_cast<double>(pm)) <=
          8e-16 * std::max(1.0, static_cast<double>(pm)));
  }
}

TEST_CASE("validity holds for arbitrary inputs") {
  RngStream rng(99);
  for (int i = 0; i < 20000; ++i) {
    const double f =
        (rng.uniform() - 0.5) * std::pow(10.0, 6.0 * rng.uniform() - 2.0);
    const double sigma =
        rng.uniform() < 0.05 ? 0.0 : std::pow(10.0, 4.0 * rng.uniform() - 2.0);
    const double dt = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
    const double dx = std::pow(10.0, -4.0 + 5.0 * rng.uniform());
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    CHECK(cp.p_minus >= 0.0);
    CHECK(cp.p_plus >= 0.0);
    CHECK(cp.p_minus + cp.p_plus <= 1.0);
  }
}

TEST_CASE("moment identities in the unclipped region") {
  // mean (p+ - p-) dx = dt f and second moment (p+ + p-) dx^2 = dt sigma^2.
  // The mean comparison is conditioned on sigma^2/(dx |f|) staying small, so
  // dx is sampled with that ratio in [1, 4].
  RngStream rng(11);
  int checked = 0;
  while (checked < 2000) {
    const double f = (rng.uniform() - 0.5) * 6.0;
    const double sigma = 0.2 + rng.uniform() * 2.0;
    const double dt = std::pow(10.0, -4.0 + 3.0 * rng.uniform());
    if (std::fabs(f) < 1e-3) continue;
    if (sigma * sigma < 1.05 * dt * f * f) continue;  // keep strictly feasible
    const double ratio = 1.0 + 3.0 * rng.uniform();
    const double dx = sigma * sigma / (ratio * std::fabs(f));
    if (dx < std::sqrt(dt) * sigma * 1.000001) continue;
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    REQUIRE(!cp.clipped_sigma);
    REQUIRE(!cp.clipped_drift);
    const double mean = (cp.p_plus - cp.p_minus) * dx;
    const double second = (cp.p_plus + cp.p_minus) * dx * dx;
    CHECK(ulps_between(mean, dt * f) <= 8);
    CHECK(ulps_between(second, dt * sigma * sigma) <= 8);
    ++checked;
  }
}

TEST_CASE("second moment identity across the full allowable range") {
  RngStream rng(12);
  for (int i = 0; i < 2000; ++i) {
    const double f = (rng.uniform() - 0.5) * 6.0;
    const double sigma = 0.2 + rng.uniform() * 2.0;
    const double dt = std::pow(10.0, -4.0 + 3.0 * rng.uniform());
    if (sigma * sigma < 1.05 * dt * f * f) continue;
    const double lo = std::sqrt(dt) * sigma * 1.000001;
    const double hi = std::fabs(f) > 0.0
                          ? sigma * sigma / std::fabs(f) * 0.999999
                          : lo * 100.0;
    if (hi <= lo) continue;
    const double dx = lo * std::pow(hi / lo, rng.uniform());
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    REQUIRE(!cp.clipped_sigma);
    REQUIRE(!cp.clipped_drift);
    const double second = (cp.p_plus + cp.p_minus) * dx * dx;
    CHECK(ulps_between(second, dt * sigma * sigma) <= 8);
  }
}

TEST_CASE("exact second moment does not move as the drift sweeps") {
  const double sigma = 1.3, dt = 0.01, dx = 0.2;
  const double target = dt * sigma * sigma;
  for (double f = -8.0; f <= 8.0; f += 0.4) {
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    REQUIRE(!cp.clipped_drift);
    CHECK(ulps_between((cp.p_plus + cp.p_minus) * dx * dx, target) <= 8);
  }
}

TEST_CASE("allowable dx range: worked examples") {
  const Vector one = Vector::Constant(1, 1.0);
  DxRange r = allowable_dx_range(Vector::Constant(1, 2.0), one, 0.01);
  CHECK(r.lo[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(r.hi[0] == doctest::Approx(0.5).epsilon(1e-14));

  r = allowable_dx_range(Vector::Zero(1), one, 0.01);
  CHECK(r.lo[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(std::isinf(r.hi[0]));

  r = allowable_dx_range(Vector::Constant(1, 15.0), one, 0.01);
  CHECK(r.lo[0] > r.hi[0]);  // empty: feasibility violated
}

TEST_CASE("feasibility condition") {
  const Vector one = Vector::Constant(1, 1.0);
  CHECK(check_feasibility(Vector::Constant(1, 5.0), one, 0.01)[0]);
  CHECK(!check_feasibility(Vector::Constant(1, 15.0), one, 0.01)[0]);
  CHECK(!check_feasibility(Vector::Constant(1, 0.5), Vector::Zero(1), 0.01)[0]);
}

TEST_CASE("rule of thumb dx") {
  CHECK(rule_of_thumb_dx(0.01, 1.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(rule_of_thumb_dx(0.04, 2.0) == doctest::Approx(0.4).epsilon(1e-14));
  // OU with temperature 1/2: sigma = 1, so dx = sqrt(dt) gives the binary
  // update of the stationary experiments
  const double sigma_ou = std::sqrt(2.0 * 0.5);
  CHECK(rule_of_thumb_dx(0.01, sigma_ou) ==
        doctest::Approx(std::sqrt(0.01)).epsilon(1e-14));
}

TEST_CASE("no clipping inside the allowable range") {
  RngStream rng(13);
  int checked = 0;
  while (checked < 3000) {
    const double f = (rng.uniform() - 0.5) * 10.0;
    const double sigma = 0.1 + rng.uniform() * 3.0;
    const double dt = std::pow(10.0, -4.0 + 3.0 * rng.uniform());
    if (!check_feasibility(Vector::Constant(1, std::fabs(f)),
                           Vector::Constant(1, sigma), dt)[0])
      continue;
    const DxRange r = allowable_dx_range(Vector::Constant(1, std::fabs(f)),
                                         Vector::Constant(1, sigma), dt);
    const double lo = r.lo[0] * (1.0 + 1e-12);
    const double hi = std::isinf(r.hi[0]) ? r.lo[0] * 1e3
                                          : r.hi[0] * (1.0 - 1e-12);
    if (hi <= lo) continue;
    const double dx = lo + (hi - lo) * rng.uniform();
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    CHECK(!cp.clipped_sigma);
    CHECK(!cp.clipped_drift);
    ++checked;
  }
}

TEST_CASE("binary reduction: dx = sqrt(dt) sigma makes p- + p+ = 1") {
  RngStream rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double f = (rng.uniform() - 0.5) * 4.0;
    const double sigma = 0.1 + rng.uniform() * 3.0;
    const double dt = std::pow(10.0, -4.0 + 3.0 * rng.uniform());
    if (sigma * sigma < 1.02 * dt * f * f) continue;
    const double dx = rule_of_thumb_dx(dt, sigma);
    const CoordProbs cp = ternary_probs_coord(f, sigma, dt, dx);
    CHECK(ulps_between(cp.p_minus + cp.p_plus, 1.0) <= 4);
  }
}

TEST_CASE("ternary increment thresholds") {
  CHECK(ternary_increment(0.45, 0.55, 0.30) == -1);
  CHECK(ternary_increment(0.45, 0.45, 0.50) == 0);
  CHECK(ternary_increment(0.45, 0.55, 0.80) == +1);
  // degenerate distribution p- = 0, p+ = 1: always +1
  CHECK(ternary_increment(0.0, 1.0, 0.0) == +1);
  CHECK(ternary_increment(0.0, 1.0, 0.5) == +1);
  CHECK(ternary_increment(0.0, 1.0, 0.999999) == +1);
}

TEST_CASE("lrw_step consumes d uniforms and matches the increment moments") {
  const SdeSpec spec = constant_spec(0.0, 1.0);
  const double dt = 0.01;
  const Vector dx = Vector::Constant(1, 0.1);
  RngStream rng(5);
  const Vector x0 = Vector::Zero(1);

  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector x1 = lrw_step(spec, x0, 0.0, dt, dx, rng);
    const double d = x1[0] - x0[0];
    sum += d;
    sumsq += d * d;
  }
  CHECK(rng.uniform_draws() == static_cast<std::uint64_t>(n));
  CHECK(rng.normal_draws() == 0);
  // E[delta] = dt f = 0 within 5 SE (SE = sqrt(dt sigma^2 / n) = 1e-4)
  CHECK(std::fabs(sum / n) < 5e-4);
  // binary update here: delta^2 = dx^2 on every draw
  CHECK(sumsq / n == doctest::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("lattice stepper: integer states and coupling to real space") {
  const SdeSpec spec = ou1d_spec();
  const double dt = 0.01;
  const double dxv = 0.07;  // ternary regime

  LatticeState ls;
  ls.z = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(1);
  ls.origin = Vector::Constant(1, 0.25);
  ls.dx = Vector::Constant(1, dxv);

  RngStream rng_lattice(21), rng_real(21);
  Vector x = ls.origin;
  double max_abs = 0.0, max_diff = 0.0;
  for (int k = 0; k < 1000; ++k) {
    lrw_step_lattice(spec, ls, 0.0 + k * dt, dt, rng_lattice);
    x = lrw_step(spec, x, 0.0 + k * dt, dt, ls.dx, rng_real);
    max_abs = std::max(max_abs, std::fabs(x[0]));
    max_diff = std::max(max_diff, std::fabs(ls.x()[0] - x[0]));
  }
  CHECK(max_diff <= std::ldexp(std::max(max_abs, 1.0), -40));
  // lattice closure of the real-space trajectory: (x_n - x_0)/dx integral
  // up to accumulated roundoff
  const double steps_taken = (x[0] - 0.25) / dxv;
  CHECK(std::fabs(steps_taken - std::round(steps_taken)) < 1e-9);
  CHECK(std::llround(steps_taken) == ls.z[0]);
}

TEST_CASE("binary update never produces a zero increment") {
  const SdeSpec spec = constant_spec(0.0, 1.0);
  const double dt = 0.01;
  LatticeState ls;
  ls.z = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(1);
  ls.origin = Vector::Zero(1);
  ls.dx = Vector::Constant(1, rule_of_thumb_dx(dt, 1.0));
  RngStream rng(31);
  int zeros = 0;
  for (int i = 0; i < 1000000; ++i) {
    ls.z[0] = 0;  // single steps from z = 0
    lrw_step_lattice(spec, ls, 0.0, dt, rng);
    if (ls.z[0] == 0) ++zeros;
  }
  CHECK(zeros == 0);
}

TEST_CASE("lrw stepper with constant schedule reproduces lrw_step") {
  const SdeSpec spec = ou1d_spec();
  const double dt = 0.01;
  const Vector dx = Vector::Constant(1, 0.1);
  Stepper st = make_lrw_stepper(DxSchedule::constant(0.1, 1));
  CHECK(st.gaussian_free);
  CHECK(st.name == "lrw");

  RngStream rng_a(8), rng_b(8);
  Vector xa = Vector::Constant(1, 0.4);
  Vector xb = xa;
  for (int k = 0; k < 200; ++k) {
    st.step(spec, xa, k * dt, dt, rng_a);
    xb = lrw_step(spec, xb, k * dt, dt, dx, rng_b);
    CHECK(xa[0] == xb[0]);
  }
}

TEST_CASE("time-varying schedule keeps the per-step update binary") {
  // sigma(t) = 1 + sin(t)/2 with dx(t) = sqrt(dt) sigma(t)
  SdeSpec spec;
  spec.dim = 1;
  spec.drift = [](const Vector&, double, Vector& out) { out.setConstant(0.2); };
  spec.diffusion = [](const Vector&, double t, Vector& out) {
    out.setConstant(1.0 + 0.5 * std::sin(t));
  };
  const double dt = 0.004;
  for (double t = 0.0; t < 3.0; t += 0.37) {
    const double sigma = 1.0 + 0.5 * std::sin(t);
    const double dx = rule_of_thumb_dx(dt, sigma);
    const CoordProbs cp = ternary_probs_coord(0.2, sigma, dt, dx);
    CHECK(ulps_between(cp.p_minus + cp.p_plus, 1.0) <= 4);
  }
}

TEST_CASE("gaussian-free contract on a full simulation") {
  const SdeSpec spec = ou1d_spec();
  Stepper st = make_lrw_stepper(DxSchedule::constant(0.1, 1));
  RngStream rng(17);
  simulate_path(spec, st, Vector::Zero(1), {0.01, 5000, 0.0, {}}, rng);
  CHECK(rng.normal_draws() == 0);
  CHECK(rng.uniform_draws() == 5000);
}

TEST_CASE("frozen coordinate when sigma = 0") {
  const CoordProbs cp = ternary_probs_coord(2.0, 0.0, 0.01, 0.1);
  CHECK(cp.p_minus == 0.0);
  CHECK(cp.p_plus == 0.0);
  CHECK(cp.clipped_drift);
  CHECK(!cp.clipped_sigma);
}

TEST_CASE("clipping vanishes as dt shrinks on the OU model") {
  RngStream params_rng(3);
  OuParams p = sample_ou_params(3, params_rng);
  p.temperature = 0.5;
  const OuModel model = make_ou(p);
  const double horizon = 40.0;
  std::vector<double> fractions;
  for (const double dt : {0.2, 0.1, 0.05}) {
    double clipped = 0.0, total = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
      auto stats = std::make_shared<LrwClipStats>();
      const double dx = rule_of_thumb_dx(dt, std::sqrt(2.0 * p.temperature));
      Stepper st = make_lrw_stepper(DxSchedule::constant(dx, 3), stats);
      RngStream rng(1000, seed);
      const auto n_steps = static_cast<std::int64_t>(horizon / dt);
      simulate_path(model.spec, st, Vector::Zero(3), {dt, n_steps, 0.0, {}},
                    rng);
      clipped += static_cast<double>(stats->clipped_sigma +
                                     stats->clipped_drift);
      total += static_cast<double>(stats->coordinate_steps);
    }
    fractions.push_back(clipped / total);
  }
  CHECK(fractions[0] >= fractions[1]);
  CHECK(fractions[1] >= fractions[2]);
}

TEST_CASE("exact lattice enumeration: weak order 1 on the OU cos test") {
  // Evolves the full LRW distribution on the lattice x = 1 + k dx with the
  // extended-precision probability oracle: a noise-free view of the weak
  // error. Frozen errors double as a distribution check for the stepper.
  const double exact =
      std::cos(std::exp(-1.0)) * std::exp(-(1.0 - std::exp(-2.0)) / 4.0);
  const std::vector<double> dts = {0.2, 0.1, 0.05, 0.025};
  const std::vector<double> frozen = {9.756618e-3, 4.819033e-3, 2.382799e-3,
                                      1.184325e-3};
  std::vector<double> errors, dp_means;
  for (const double dt : dts) {
    const auto n = static_cast<int>(std::llround(1.0 / dt));
    const double dx = std::sqrt(dt);
    const int m = n + 2;
    std::vector<double> prob(2 * m + 1, 0.0), next(2 * m + 1, 0.0);
    prob[m] = 1.0;
    for (int step = 0; step < n; ++step) {
      std::fill(next.begin(), next.end(), 0.0);
      for (int k = -m; k <= m; ++k) {
        const double mass = prob[k + m];
        if (mass == 0.0) continue;
        const double x = 1.0 + k * dx;
        long double pm, pp;
        oracle_probs(-x, 1.0, dt, dx, pm, pp);
        if (k + 1 <= m) next[k + 1 + m] += mass * static_cast<double>(pp);
        if (k - 1 >= -m) next[k - 1 + m] += mass * static_cast<double>(pm);
        next[k + m] += mass * static_cast<double>(1.0L - pp - pm);
      }
      std::swap(prob, next);
    }
    double mean_cos = 0.0;
    for (int k = -m; k <= m; ++k)
      mean_cos += prob[k + m] * std::cos(1.0 + k * dx);
    dp_means.push_back(mean_cos);
    errors.push_back(std::fabs(mean_cos - exact));
  }
  for (std::size_t i = 0; i < dts.size(); ++i)
    CHECK(errors[i] == doctest::Approx(frozen[i]).epsilon(1e-5));

  // log-log slope of the exact errors
  double su = 0, sv = 0, suu = 0, suv = 0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    su += std::log(dts[i]);
    sv += std::log(errors[i]);
  }
  const double ub = su / dts.size(), vb = sv / dts.size();
  for (std::size_t i = 0; i < dts.size(); ++i) {
    suu += (std::log(dts[i]) - ub) * (std::log(dts[i]) - ub);
    suv += (std::log(dts[i]) - ub) * (std::log(errors[i]) - vb);
  }
  CHECK(suv / suu == doctest::Approx(1.014).epsilon(0.01));

  // Monte Carlo with the production stepper against the enumerated value at
  // the coarsest stepsize (5 SE band)
  {
    const double dt = 0.2;
    const SdeSpec spec = ou1d_spec();
    Stepper st = make_lrw_stepper(
        DxSchedule::constant(std::sqrt(dt), 1));
    const int reps = 100000;
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream rng(4242, r);
      const PathOutcome out = simulate_path(
          spec, st, Vector::Constant(1, 1.0), {dt, 5, 0.0, {}}, rng);
      const double phi = std::cos(out.x[0]);
      const double delta = phi - mean;
      mean += delta / (r + 1);
      m2 += delta * (phi - mean);
    }
    const double se = std::sqrt(m2 / (reps - 1.0) / reps);
    // the sampled mean must match the enumerated expectation at this dt,
    // not the continuous-time limit
    CHECK(std::fabs(mean - dp_means[0]) <= 5.0 * se);
  }
}
