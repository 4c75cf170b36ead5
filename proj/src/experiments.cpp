// SPDX-License-Identifier: Apache-2.0
#include "lrwsde/experiments.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "lrwsde/baselines.hpp"
#include "lrwsde/lrw.hpp"
#include "lrwsde/models.hpp"
#include "lrwsde/quantise.hpp"
#include "lrwsde/stats.hpp"
#include "lrwsde/transforms.hpp"

namespace lrwsde {

namespace {

// Stream-id layout: purpose tag | 20-bit a | 20-bit b | 24-bit c. Parameter
// streams stay disjoint from trajectory streams whatever the grid shape.
constexpr std::uint64_t kParamsPurpose = 1;
constexpr std::uint64_t kTrajPurpose = 2;

std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t a,
                        std::uint64_t b, std::uint64_t c) {
  return (purpose << 60) | (a << 44) | (b << 24) | c;
}

void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& body) {
  if (threads <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    threads = hc == 0 ? 1 : static_cast<int>(hc);
  }
  threads = static_cast<int>(
      std::min<std::int64_t>(threads, std::max<std::int64_t>(n, 1)));
  if (threads == 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

Stepper make_scheme_stepper(const std::string& scheme, const DxSchedule& dx,
                            std::shared_ptr<LrwClipStats> stats) {
  if (scheme == "lrw") return make_lrw_stepper(dx, std::move(stats));
  if (scheme == "em") return make_em_stepper();
  if (scheme == "two_point") return make_two_point_stepper();
  throw ConfigError("unknown scheme: " + scheme);
}

// KL of the accumulated empirical Gaussian against the target; +inf for a
// diverged run or a singular estimate.
double kl_or_inf(bool diverged, const MomentAccumulator& acc,
                 const Vector& mean_true, const Matrix& cov_true) {
  if (diverged || acc.count() < acc.dim() + 1)
    return std::numeric_limits<double>::infinity();
  const EmpiricalGaussian eg = empirical_gaussian(acc);
  if (eg.singular) return std::numeric_limits<double>::infinity();
  return gaussian_kl(eg.mean, eg.cov, mean_true, cov_true);
}

}  // namespace

OuGridResult run_ou_grid(const ExperimentConfig& cfg, int threads) {
  if (cfg.experiment != "ou-grid")
    throw ConfigError("run_ou_grid: wrong experiment type");
  cfg.validate();
  const Index d = cfg.model.d;
  const double temperature = cfg.model.temperature;
  const std::int64_t n_dt = static_cast<std::int64_t>(cfg.dt_grid.size());
  const std::int64_t n_mult =
      static_cast<std::int64_t>(cfg.dx_multipliers.size());
  const std::int64_t n_rows = n_dt * n_mult * cfg.seeds;

  OuGridResult res;
  res.rows.resize(n_rows);
  parallel_for(n_rows, threads, [&](std::int64_t r) {
    const std::int64_t seed = r % cfg.seeds;
    const std::int64_t i_mult = (r / cfg.seeds) % n_mult;
    const std::int64_t i_dt = r / (cfg.seeds * n_mult);
    const double dt = cfg.dt_grid[i_dt];

    RngStream params_rng(cfg.base_seed, stream_id(kParamsPurpose, 0, 0, seed));
    OuParams p = sample_ou_params(d, params_rng);
    p.temperature = temperature;
    const OuModel model = make_ou(p);

    const double dx =
        cfg.dx_multipliers[i_mult] * std::sqrt(2.0 * dt * temperature);
    auto stats = std::make_shared<LrwClipStats>();
    Stepper stepper = make_lrw_stepper(DxSchedule::constant(dx, d), stats);

    RngStream rng(cfg.base_seed, stream_id(kTrajPurpose, i_dt, i_mult, seed));
    const std::int64_t burn = static_cast<std::int64_t>(
        std::floor(cfg.burn_in * static_cast<double>(cfg.steps)));
    MomentAccumulator acc(d);
    Observer obs = [&](std::int64_t k, double, const Vector& x) {
      if (k > burn) acc.add(x);
    };
    StepConfig sc{dt, cfg.steps, 0.0, {}};
    const PathOutcome out =
        simulate_path(model.spec, stepper, Vector::Zero(d), sc, rng, obs);

    OuGridRow& row = res.rows[r];
    row.dt = dt;
    row.dx = dx;
    row.seed = seed;
    row.kl = kl_or_inf(out.diverged, acc, model.stationary_mean,
                       model.stationary_cov);
    row.clipped_fraction = stats->clipped_fraction();
  });
  return res;
}

OuQuantResult run_ou_quantisation(const ExperimentConfig& cfg, int threads) {
  if (cfg.experiment != "ou-quant")
    throw ConfigError("run_ou_quantisation: wrong experiment type");
  cfg.validate();
  const Index d = cfg.model.d;
  const double temperature = cfg.model.temperature;
  const std::int64_t n_dt = static_cast<std::int64_t>(cfg.dt_grid.size());
  const std::int64_t n_prec =
      static_cast<std::int64_t>(cfg.precisions.size());
  const std::int64_t n_schemes =
      static_cast<std::int64_t>(cfg.schemes.size());
  const std::int64_t n_rows = n_schemes * n_prec * n_dt * cfg.seeds;

  OuQuantResult res;
  res.rows.resize(n_rows);
  parallel_for(n_rows, threads, [&](std::int64_t r) {
    const std::int64_t seed = r % cfg.seeds;
    const std::int64_t i_dt = (r / cfg.seeds) % n_dt;
    const std::int64_t i_prec = (r / (cfg.seeds * n_dt)) % n_prec;
    const std::int64_t i_scheme = r / (cfg.seeds * n_dt * n_prec);
    const std::string& scheme = cfg.schemes[i_scheme];
    const double dt = cfg.dt_grid[i_dt];
    const PrecisionFormat fmt =
        PrecisionFormat::from_name(cfg.precisions[i_prec]);

    RngStream params_rng(cfg.base_seed, stream_id(kParamsPurpose, 0, 0, seed));
    OuParams p = sample_ou_params(d, params_rng);
    p.temperature = temperature;
    const OuModel model = make_ou(p);
    const SdeSpec quantised = quantise_spec(model.spec, fmt);

    const double dx = std::sqrt(2.0 * dt * temperature);
    Stepper stepper =
        make_scheme_stepper(scheme, DxSchedule::constant(dx, d), nullptr);

    // the trajectory stream ignores the precision index so that runs of the
    // same (scheme, dt, seed) cell are driven by identical uniforms
    RngStream rng(cfg.base_seed,
                  stream_id(kTrajPurpose, i_scheme, i_dt, seed));
    const std::int64_t burn = static_cast<std::int64_t>(
        std::floor(cfg.burn_in * static_cast<double>(cfg.steps)));
    MomentAccumulator acc(d);
    Observer obs = [&](std::int64_t k, double, const Vector& x) {
      if (k > burn) acc.add(x);
    };
    StepConfig sc{dt, cfg.steps, 0.0, {}};
    const PathOutcome out =
        simulate_path(quantised, stepper, Vector::Zero(d), sc, rng, obs);

    OuQuantRow& row = res.rows[r];
    row.scheme = scheme;
    row.precision = fmt.name;
    row.dt = dt;
    row.seed = seed;
    row.kl = kl_or_inf(out.diverged, acc, model.stationary_mean,
                       model.stationary_cov);
  });
  return res;
}

PoissonResult run_poisson(const ExperimentConfig& cfg, int threads) {
  if (cfg.experiment != "poisson")
    throw ConfigError("run_poisson: wrong experiment type");
  cfg.validate();
  const std::int64_t n_dt = static_cast<std::int64_t>(cfg.dt_grid.size());
  const std::int64_t n_schemes =
      static_cast<std::int64_t>(cfg.schemes.size());
  const std::int64_t n_rows = n_schemes * n_dt * cfg.seeds;

  PoissonResult res;
  res.rows.resize(n_rows);
  parallel_for(n_rows, threads, [&](std::int64_t r) {
    const std::int64_t seed = r % cfg.seeds;
    const std::int64_t i_dt = (r / cfg.seeds) % n_dt;
    const std::int64_t i_scheme = r / (cfg.seeds * n_dt);
    const std::string& scheme = cfg.schemes[i_scheme];
    const double dt = cfg.dt_grid[i_dt];

    // one data set per seed, shared across schemes and stepsizes
    RngStream model_rng(cfg.base_seed, stream_id(kParamsPurpose, 0, 0, seed));
    const PoissonModel model =
        make_poisson_model(cfg.model.d, cfg.model.J, cfg.model.sigma1,
                           model_rng);
    const Index dim = model.spec.dim;

    const double dx = std::sqrt(2.0 * dt);  // rule of thumb with sigma sqrt(2)
    Stepper stepper =
        make_scheme_stepper(scheme, DxSchedule::constant(dx, dim), nullptr);

    RngStream rng(cfg.base_seed,
                  stream_id(kTrajPurpose, i_scheme, i_dt, seed));
    double sum0 = 0.0;
    std::int64_t n0 = 0;
    Observer obs = [&](std::int64_t, double, const Vector& x) {
      sum0 += x[0];
      ++n0;
    };
    StepConfig sc{dt, cfg.steps, 0.0, {}};
    const PathOutcome out = simulate_path(model.spec, stepper,
                                          model.params.x_star, sc, rng, obs);

    PoissonRow& row = res.rows[r];
    row.scheme = scheme;
    row.dt = dt;
    row.seed = seed;
    row.exploded = out.diverged;
    if (!out.diverged && n0 > 0) {
      const double err = sum0 / static_cast<double>(n0) -
                         model.params.x_star[0];
      row.mse = err * err;
    } else {
      row.mse = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return res;
}

ConvergeResult run_convergence(const ExperimentConfig& cfg, int threads) {
  if (cfg.experiment != "converge")
    throw ConfigError("run_convergence: wrong experiment type");
  cfg.validate();
  // 1-d OU cos test: A=1, b=0, T=0.5 -> sigma=1, x0=1, horizon 1;
  // E[cos X_1] = cos(e^-1) exp(-(1 - e^-2)/4)
  const double exact =
      std::cos(std::exp(-1.0)) * std::exp(-(1.0 - std::exp(-2.0)) / 4.0);
  OuParams p;
  p.A = Matrix::Constant(1, 1, 1.0);
  p.b = Vector::Zero(1);
  p.temperature = 0.5;
  const OuModel model = make_ou(p);

  const std::int64_t n_dt = static_cast<std::int64_t>(cfg.dt_grid.size());
  const std::int64_t n_schemes =
      static_cast<std::int64_t>(cfg.schemes.size());
  const std::int64_t n_cells = n_schemes * n_dt;

  struct Cell {
    double err = 0.0, se = 0.0;
  };
  std::vector<Cell> cells(n_cells);
  parallel_for(n_cells, threads, [&](std::int64_t c) {
    const std::int64_t i_dt = c % n_dt;
    const std::int64_t i_scheme = c / n_dt;
    const std::string& scheme = cfg.schemes[i_scheme];
    const double dt = cfg.dt_grid[i_dt];
    const std::int64_t n_steps =
        std::max<std::int64_t>(1, std::llround(1.0 / dt));

    const double dx = std::sqrt(dt);  // rule of thumb, sigma = 1
    Stepper stepper =
        make_scheme_stepper(scheme, DxSchedule::constant(dx, 1), nullptr);

    double mean = 0.0, m2 = 0.0;
    const Vector x0 = Vector::Constant(1, 1.0);
    StepConfig sc{dt, n_steps, 0.0, {}};
    for (std::int64_t rep = 0; rep < cfg.replicas; ++rep) {
      RngStream rng(cfg.base_seed,
                    stream_id(kTrajPurpose, i_scheme, i_dt, rep));
      const PathOutcome out = simulate_path(model.spec, stepper, x0, sc, rng);
      const double phi = std::cos(out.x[0]);
      const double delta = phi - mean;
      mean += delta / static_cast<double>(rep + 1);
      m2 += delta * (phi - mean);
    }
    const double n = static_cast<double>(cfg.replicas);
    cells[c].err = std::fabs(mean - exact);
    cells[c].se = cfg.replicas > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  });

  ConvergeResult res;
  for (std::int64_t i_scheme = 0; i_scheme < n_schemes; ++i_scheme) {
    std::vector<std::pair<double, double>> pts;
    for (std::int64_t i_dt = 0; i_dt < n_dt; ++i_dt)
      pts.emplace_back(cfg.dt_grid[i_dt],
                       cells[i_scheme * n_dt + i_dt].err);
    const WeakOrderFit fit = weak_order_estimate(pts);
    res.slopes[cfg.schemes[i_scheme]] = fit.slope;
    for (std::int64_t i_dt = 0; i_dt < n_dt; ++i_dt) {
      const Cell& cell = cells[i_scheme * n_dt + i_dt];
      res.rows.push_back({cfg.schemes[i_scheme], cfg.dt_grid[i_dt], cell.err,
                          cell.se, fit.slope});
    }
  }
  return res;
}

namespace {

struct SimulateSetup {
  SdeSpec spec;
  Vector x0;
  DxSchedule dx;
};

SimulateSetup simulate_setup(const ExperimentConfig& cfg, RngStream& rng) {
  SimulateSetup s;
  const ModelConfig& m = cfg.model;
  if (m.type == "ou") {
    OuParams p;
    if (m.A) {
      p.A = *m.A;
      p.b = *m.b;
    } else {
      RngStream params_rng(m.param_seed, stream_id(kParamsPurpose, 0, 0, 0));
      p = sample_ou_params(m.d, params_rng);
    }
    p.temperature = m.temperature;
    const OuModel model = make_ou(p);
    s.spec = model.spec;
    s.x0 = Vector::Zero(s.spec.dim);
    const double dx = cfg.dx_multiplier *
                      rule_of_thumb_dx(cfg.dt, std::sqrt(2.0 * m.temperature));
    s.dx = DxSchedule::constant(dx, s.spec.dim);
  } else if (m.type == "poisson") {
    RngStream model_rng(m.param_seed, stream_id(kParamsPurpose, 0, 0, 0));
    const PoissonModel model =
        make_poisson_model(m.d, m.J, m.sigma1, model_rng);
    s.spec = model.spec;
    s.x0 = model.params.x_star;
    const double dx =
        cfg.dx_multiplier * rule_of_thumb_dx(cfg.dt, std::sqrt(2.0));
    s.dx = DxSchedule::constant(dx, s.spec.dim);
  } else if (m.type == "gaussian-flow") {
    NoiseSchedule ns;
    ns.sigma = [s0 = m.sigma0, r = m.rate](double t) {
      return s0 * std::exp(-r * t);
    };
    // noising-direction derivative of the decaying schedule
    ns.sigma_dot = [s0 = m.sigma0, r = m.rate](double t) {
      return r * s0 * std::exp(-r * t);
    };
    ns = with_alpha_multiplier(ns, m.alpha_multiplier);
    const FieldFn score = make_gaussian_flow(m.sigma_data, ns);
    s.spec = flow_to_sde(score, ns, 1);
    const double v0 = m.sigma_data * m.sigma_data + ns.sigma(0.0) * ns.sigma(0.0);
    s.x0 = Vector::Constant(1, std::sqrt(v0) * standard_normal(rng));
    const double dt = cfg.dt;
    const double mult = cfg.dx_multiplier;
    s.dx = DxSchedule([alpha = ns.alpha, dt, mult](double t, Vector& out) {
      out.setConstant(mult * std::sqrt(dt) *
                      std::sqrt(2.0 * alpha(t)));
    });
  } else {
    throw ConfigError("unknown model type: " + m.type);
  }
  if (!cfg.precision.empty())
    s.spec = quantise_spec(s.spec, PrecisionFormat::from_name(cfg.precision));
  return s;
}

}  // namespace

SimulateResult run_simulate(const ExperimentConfig& cfg) {
  if (cfg.experiment != "simulate")
    throw ConfigError("run_simulate: wrong experiment type");
  cfg.validate();
  RngStream rng(cfg.base_seed, stream_id(kTrajPurpose, 0, 0, 0));
  SimulateSetup s = simulate_setup(cfg, rng);
  Stepper stepper = make_scheme_stepper(cfg.scheme, s.dx, nullptr);

  SimulateResult res;
  res.dim = s.spec.dim;
  res.steps.push_back(0);
  res.times.push_back(0.0);
  res.states.push_back(s.x0);
  Observer obs = [&](std::int64_t k, double t, const Vector& x) {
    if (k % cfg.stride == 0) {
      res.steps.push_back(k);
      res.times.push_back(t);
      res.states.push_back(x);
    }
  };
  StepConfig sc{cfg.dt, cfg.steps, 0.0, {}};
  const PathOutcome out =
      simulate_path(s.spec, stepper, s.x0, sc, rng, obs);
  res.diverged = out.diverged;
  return res;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_csv(const OuGridResult& r, std::ostream& os) {
  os << "dt,dx,seed,kl,clipped_fraction\n";
  for (const auto& row : r.rows)
    os << format_double(row.dt) << ',' << format_double(row.dx) << ','
       << row.seed << ',' << format_double(row.kl) << ','
       << format_double(row.clipped_fraction) << '\n';
}

void write_csv(const OuQuantResult& r, std::ostream& os) {
  os << "scheme,precision,dt,seed,kl\n";
  for (const auto& row : r.rows)
    os << row.scheme << ',' << row.precision << ',' << format_double(row.dt)
       << ',' << row.seed << ',' << format_double(row.kl) << '\n';
}

void write_csv(const PoissonResult& r, std::ostream& os) {
  os << "scheme,dt,seed,mse,exploded\n";
  for (const auto& row : r.rows) {
    os << row.scheme << ',' << format_double(row.dt) << ',' << row.seed
       << ',';
    if (row.exploded)
      os << "exploded";
    else
      os << format_double(row.mse);
    os << ',' << (row.exploded ? 1 : 0) << '\n';
  }
}

void write_csv(const ConvergeResult& r, std::ostream& os) {
  os << "scheme,dt,abs_error,mc_se,slope\n";
  for (const auto& row : r.rows)
    os << row.scheme << ',' << format_double(row.dt) << ','
       << format_double(row.abs_error) << ',' << format_double(row.mc_se)
       << ',' << format_double(row.slope) << '\n';
}

void write_csv(const SimulateResult& r, std::ostream& os) {
  os << "step,t";
  for (Index i = 0; i < r.dim; ++i) os << ",x" << i;
  os << '\n';
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    os << r.steps[k] << ',' << format_double(r.times[k]);
    for (Index i = 0; i < r.dim; ++i)
      os << ',' << format_double(r.states[k][i]);
    os << '\n';
  }
}

namespace {

void write_outputs(const ExperimentConfig& cfg,
                   const std::function<void(std::ostream&)>& csv_writer) {
  std::ofstream csv(cfg.out, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open output file: " + cfg.out);
  csv_writer(csv);
  csv.close();
  nlohmann::json meta;
  meta["version"] = kVersion;
  meta["config"] = cfg.to_json();
  std::ofstream mf(cfg.out + ".meta.json", std::ios::binary);
  if (!mf)
    throw std::runtime_error("cannot open sidecar file: " + cfg.out +
                             ".meta.json");
  mf << meta.dump(2) << '\n';
}

}  // namespace

RunSummary run_and_write(const ExperimentConfig& cfg, int threads) {
  RunSummary summary;
  if (cfg.experiment == "ou-grid") {
    const OuGridResult r = run_ou_grid(cfg, threads);
    summary.rows = static_cast<std::int64_t>(r.rows.size());
    write_outputs(cfg, [&](std::ostream& os) { write_csv(r, os); });
  } else if (cfg.experiment == "ou-quant") {
    const OuQuantResult r = run_ou_quantisation(cfg, threads);
    summary.rows = static_cast<std::int64_t>(r.rows.size());
    write_outputs(cfg, [&](std::ostream& os) { write_csv(r, os); });
  } else if (cfg.experiment == "poisson") {
    const PoissonResult r = run_poisson(cfg, threads);
    summary.rows = static_cast<std::int64_t>(r.rows.size());
    write_outputs(cfg, [&](std::ostream& os) { write_csv(r, os); });
  } else if (cfg.experiment == "converge") {
    const ConvergeResult r = run_convergence(cfg, threads);
    summary.rows = static_cast<std::int64_t>(r.rows.size());
    summary.slopes = r.slopes;
    write_outputs(cfg, [&](std::ostream& os) { write_csv(r, os); });
  } else if (cfg.experiment == "simulate") {
    const SimulateResult r = run_simulate(cfg);
    summary.rows = static_cast<std::int64_t>(r.steps.size());
    write_outputs(cfg, [&](std::ostream& os) { write_csv(r, os); });
  } else {
    throw ConfigError("unknown experiment: " + cfg.experiment);
  }
  return summary;
}

}  // namespace lrwsde
