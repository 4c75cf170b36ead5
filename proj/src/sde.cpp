// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/sde.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lrwsde {

DxSchedule DxSchedule::constant(Vector dx) {
  if ((dx.array() <= 0.0).any())
    throw std::invalid_argument("DxSchedule: dx entries must be positive");
  return DxSchedule([dx = std::move(dx)](double, Vector& out) { out = dx; });
}

DxSchedule DxSchedule::constant(double dx, Index dim) {
  return constant(Vector::Constant(dim, dx));
}

std::vector<SpecViolation> validate_spec(
    const SdeSpec& spec, std::span<const std::pair<Vector, double>> probes) {
  if (probes.empty())
    throw std::invalid_argument("validate_spec: probe list is empty");
  std::vector<SpecViolation> report;
  Vector buf(spec.dim);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& [x, t] = probes[i];
    try {
      buf.resize(spec.dim);
      spec.drift(x, t, buf);
      if (buf.size() != spec.dim) {
        std::ostringstream os;
        os << "drift output has length " << buf.size() << ", expected "
           << spec.dim;
        report.push_back({i, os.str()});
      }
    } catch (const std::exception& e) {
      report.push_back({i, std::string("drift evaluator raised: ") + e.what()});
    }
    try {
      buf.resize(spec.dim);
      spec.diffusion(x, t, buf);
      if (buf.size() != spec.dim) {
        std::ostringstream os;
        os << "diffusion output has length " << buf.size() << ", expected "
           << spec.dim;
        report.push_back({i, os.str()});
      } else {
        for (Index j = 0; j < buf.size(); ++j) {
          if (!(buf[j] >= 0.0)) {
            std::ostringstream os;
            os << "diffusion[" << j << "] = " << buf[j] << " is negative";
            report.push_back({i, os.str()});
          }
        }
      }
    } catch (const std::exception& e) {
      report.push_back(
          {i, std::string("diffusion evaluator raised: ") + e.what()});
    }
  }
  return report;
}

namespace {

bool state_ok(const Vector& x) {
  for (Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::fabs(x[i]) > kDivergenceLimit)
      return false;
  }
  return true;
}

}  // namespace

PathOutcome simulate_path(const SdeSpec& spec, Stepper& stepper,
                          const Vector& x0, const StepConfig& cfg,
                          RngStream& rng, const Observer& observer) {
  if (cfg.dt <= 0.0) throw std::invalid_argument("simulate_path: dt must be > 0");
  if (cfg.n_steps < 1)
    throw std::invalid_argument("simulate_path: n_steps must be >= 1");
  if (x0.size() != spec.dim)
    throw std::invalid_argument("simulate_path: x0 has wrong length");

  PathOutcome out;
  out.x = x0;
  Vector prev = x0;
  for (std::int64_t k = 1; k <= cfg.n_steps; ++k) {
    const double t = cfg.t0 + static_cast<double>(k - 1) * cfg.dt;
    prev = out.x;
    stepper.step(spec, out.x, t, cfg.dt, rng);
    if (!state_ok(out.x)) {
      out.x = prev;
      out.diverged = true;
      out.diverged_step = k;
      return out;
    }
    out.steps_taken = k;
    if (observer) observer(k, t + cfg.dt, out.x);
  }
  return out;
}

}  // namespace lrwsde
