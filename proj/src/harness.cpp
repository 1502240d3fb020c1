#include "pipf/harness.hpp"

#include "pipf/metrics.hpp"
#include "pipf/models.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

namespace pipf {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(values[i]);
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s + "]";
}

std::string quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c;
  }
  return q + "\"";
}

struct Truth {
  StatePath path;
  ObservationRecord record;
};

Truth simulate_truth(const DiffusionModel& model, const ObservationModel& obs, const TimeGrid& grid,
                     const StreamId& base) {
  const Matrix x0 = sample_initial(model, 1, base.with_purpose(StreamPurpose::truth_initial));
  const NoisePath noise =
      draw_noise(base.with_purpose(StreamPurpose::truth), model.noise_dim(), grid.steps(), grid.dt());
  StatePath path = simulate_path(model, grid, zero_policy(model.noise_dim()), x0.col(0), noise);
  ObservationRecord record = generate_observations(obs, grid, path, base.with_purpose(StreamPurpose::observation));
  return Truth{std::move(path), std::move(record)};
}

FilterSettings filter_settings(const ExperimentConfig& c, std::size_t window) {
  FilterSettings s;
  s.particles = c.particles;
  s.window = window;
  s.gamma_thres = c.gamma_thres;
  s.resample = c.resample;
  return s;
}

SirSettings sir_settings(const ExperimentConfig& c) {
  SirSettings s;
  s.particles = c.particles;
  s.gamma_thres = c.gamma_thres;
  s.resample = c.resample;
  return s;
}

PolicyFactory make_factory(const std::string& controller, const std::optional<LinearSystem>& system,
                           const ExperimentConfig& c) {
  if (controller == "zero") return zero_policy_factory();
  if (controller == "lqr") {
    if (!system) throw ConfigError("controller lqr needs a linear model");
    return lqr_policy_factory(*system);
  }
  if (controller == "ilqr") {
    IlqrOptions options;
    options.iterations = c.ilqr_iterations;
    return ilqr_policy_factory(options);
  }
  throw ConfigError("unknown controller '" + controller + "'");
}

ResultRow make_row(std::size_t trial, const std::string& tag, const FilterOutput& out, const Moments& oracle) {
  const Moments m = ensemble_moments(out.posterior);
  ResultRow row;
  row.trial = trial;
  row.step = out.step;
  row.time = out.time;
  row.estimator = tag;
  row.mse_mean = squared_error(m.mean, oracle.mean);
  row.mse_cov = squared_error(m.cov, oracle.cov);
  row.effective_ratio = out.effective_ratio;
  row.resampled = out.resampled;
  row.mean = m.mean;
  return row;
}

std::vector<Moments> kalman_oracle(const LinearSystem& system, const GaussianPrior& prior,
                                   const ObservationRecord& record, const TimeGrid& grid) {
  std::vector<Moments> oracle;
  for (const auto& s : kalman_bucy_run(system, prior, record, grid)) oracle.push_back({s.mean, s.cov});
  return oracle;
}

GaussianPrior make_prior(const ExperimentConfig& c, Index n) {
  return GaussianPrior{Vector::Constant(n, c.m0), c.p0 * Matrix::Identity(n, n)};
}

std::size_t worker_count(std::size_t threads, std::size_t trials) {
  std::size_t w = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, trials));
}

}  // namespace

ExperimentConfig default_config(const std::string& scenario) {
  ExperimentConfig c;
  if (scenario == "ou") return c;
  if (scenario == "linear_nd") {
    c.scenario = "linear_nd";
    c.resample = false;
    return c;
  }
  if (scenario == "benes") {
    c.scenario = "benes";
    c.steps = 6000;
    c.dt = 0.001;
    c.window = 10;
    c.controller = "ilqr";
    return c;
  }
  throw ConfigError("unknown scenario '" + scenario + "'");
}

void bind_config(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--scenario", c.scenario, "ou | linear_nd | benes");
  app.add_option("--kappa", c.kappa, "OU mean reversion rate");
  app.add_option("--sigma-b,--sigma_b", c.sigma_b, "measurement noise scale");
  app.add_option("--m0", c.m0, "prior mean (every component)");
  app.add_option("--p0", c.p0, "prior variance (times identity)");
  app.add_option("--steps", c.steps, "number of time steps L");
  app.add_option("--dt", c.dt, "time step");
  app.add_option("--particles", c.particles, "particles K");
  app.add_option("--window", c.window, "sliding window H in steps");
  app.add_option("--controller", c.controller, "zero | lqr | ilqr");
  app.add_option("--gamma-thres,--gamma_thres", c.gamma_thres, "resampling threshold on the effective ratio");
  app.add_option("--resample", c.resample, "resampling on/off");
  app.add_option("--trials", c.trials, "independent trials");
  app.add_option("--seed", c.seed, "base seed");
  app.add_option("--out", c.out, "output CSV path");
  app.add_option("--threads", c.threads, "worker threads (0: all cores)");
  app.add_option("--h-list,--h_list", c.h_list, "window lengths for the H sweep")->delimiter(',');
  app.add_option("--n-list,--n_list", c.n_list, "state dimensions for the dimension sweep")->delimiter(',');
  app.add_option("--mu", c.mu, "Benes drift parameter");
  app.add_option("--sigma-w,--sigma_w", c.sigma_w, "Benes process noise scale");
  app.add_option("--h1", c.h1, "Benes observation gain");
  app.add_option("--h2", c.h2, "Benes observation offset");
  app.add_option("--x0", c.x0, "Benes initial state");
  app.add_option("--snapshot-times,--snapshot_times", c.snapshot_times, "Benes density snapshot times")
      ->delimiter(',');
  app.add_option("--bandwidth", c.bandwidth, "KDE bandwidth");
  app.add_option("--kde-points,--kde_points", c.kde_points, "KDE grid size");
  app.add_option("--ilqr-iterations,--ilqr_iterations", c.ilqr_iterations, "iLQR iterations per window");
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "scenario = " << quote(c.scenario) << '\n'
     << "kappa = " << format_double(c.kappa) << '\n'
     << "sigma_b = " << format_double(c.sigma_b) << '\n'
     << "m0 = " << format_double(c.m0) << '\n'
     << "p0 = " << format_double(c.p0) << '\n'
     << "steps = " << c.steps << '\n'
     << "dt = " << format_double(c.dt) << '\n'
     << "particles = " << c.particles << '\n'
     << "window = " << c.window << '\n'
     << "controller = " << quote(c.controller) << '\n'
     << "gamma_thres = " << format_double(c.gamma_thres) << '\n'
     << "resample = " << (c.resample ? "true" : "false") << '\n'
     << "trials = " << c.trials << '\n'
     << "seed = " << c.seed << '\n'
     << "out = " << quote(c.out) << '\n'
     << "threads = " << c.threads << '\n'
     << "h_list = " << format_list(c.h_list) << '\n'
     << "n_list = " << format_list(c.n_list) << '\n'
     << "mu = " << format_double(c.mu) << '\n'
     << "sigma_w = " << format_double(c.sigma_w) << '\n'
     << "h1 = " << format_double(c.h1) << '\n'
     << "h2 = " << format_double(c.h2) << '\n'
     << "x0 = " << format_double(c.x0) << '\n'
     << "snapshot_times = " << format_list(c.snapshot_times) << '\n'
     << "bandwidth = " << format_double(c.bandwidth) << '\n'
     << "kde_points = " << c.kde_points << '\n'
     << "ilqr_iterations = " << c.ilqr_iterations << '\n';
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  CLI::App app;
  app.allow_config_extras(false);
  bind_config(app, base);
  std::istringstream is(text);
  try {
    app.parse_from_stream(is);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return base;
}

void validate_config(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.scenario == "ou" || c.scenario == "linear_nd" || c.scenario == "benes",
          "scenario must be ou, linear_nd or benes");
  require(c.controller == "zero" || c.controller == "lqr" || c.controller == "ilqr",
          "controller must be zero, lqr or ilqr");
  require(c.scenario != "benes" || c.controller != "lqr", "the Benes model is nonlinear; use zero or ilqr");
  require(c.kappa > 0.0 && std::isfinite(c.kappa), "kappa must be positive");
  require(c.sigma_b > 0.0 && std::isfinite(c.sigma_b), "sigma_b must be positive");
  require(std::isfinite(c.m0), "m0 must be finite");
  require(c.p0 > 0.0 && std::isfinite(c.p0), "p0 must be positive");
  require(c.steps >= 1, "steps must be at least 1");
  require(c.dt > 0.0 && std::isfinite(c.dt), "dt must be positive");
  require(c.particles >= 1, "particles must be at least 1");
  require(c.window >= 1, "window must be at least 1");
  require(c.gamma_thres >= 0.0 && c.gamma_thres <= 1.0, "gamma_thres must lie in [0, 1]");
  require(c.trials >= 1, "trials must be at least 1");
  require(!c.out.empty(), "out must not be empty");
  require(!c.h_list.empty(), "h_list must not be empty");
  for (auto h : c.h_list) require(h >= 1, "h_list entries must be at least 1");
  require(!c.n_list.empty(), "n_list must not be empty");
  for (auto n : c.n_list) require(n >= 1, "n_list entries must be at least 1");
  require(c.sigma_w > 0.0 && std::isfinite(c.sigma_w), "sigma_w must be positive");
  require(c.h1 != 0.0 && std::isfinite(c.h1), "h1 must be non-zero");
  require(std::isfinite(c.mu) && std::isfinite(c.h2) && std::isfinite(c.x0), "Benes parameters must be finite");
  require(c.bandwidth > 0.0, "bandwidth must be positive");
  require(c.kde_points >= 2, "kde_points must be at least 2");
  require(c.ilqr_iterations >= 1, "ilqr_iterations must be at least 1");
  if (c.scenario == "benes") {
    const TimeGrid grid(0.0, c.dt, c.steps);
    for (double t : c.snapshot_times) {
      try {
        grid.index_of(t);
      } catch (const UsageError& e) {
        throw ConfigError(std::string("snapshot_times: ") + e.what());
      }
    }
  }
}

std::string estimator_tag(const std::string& kind, const std::string& suffix) {
  return suffix.empty() ? kind : kind + "_" + suffix;
}

// ---------------------------------------------------------------------------

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  Index width = 0;
  for (const auto& r : rows) width = std::max(width, r.mean.size());
  os << "trial,step,time,estimator,mse_mean,mse_cov,effective_ratio,resampled";
  for (Index i = 0; i < width; ++i) os << ",mean_" << i;
  os << '\n';
  for (const auto& r : rows) {
    os << r.trial << ',' << r.step << ',' << format_double(r.time) << ',' << r.estimator << ','
       << format_double(r.mse_mean) << ',' << format_double(r.mse_cov) << ',' << format_double(r.effective_ratio)
       << ',' << (r.resampled ? 1 : 0);
    for (Index i = 0; i < width; ++i) {
      os << ',';
      if (i < r.mean.size()) os << format_double(r.mean(i));
    }
    os << '\n';
  }
}

void write_densities_csv(std::ostream& os, const std::vector<DensityRow>& rows) {
  os << "time,x,density,source\n";
  for (const auto& r : rows) {
    os << format_double(r.time) << ',' << format_double(r.x) << ',' << format_double(r.density) << ',' << r.source
       << '\n';
  }
}

void write_distances_csv(std::ostream& os, const std::vector<DistanceRow>& rows) {
  os << "trial,time,source,l1\n";
  for (const auto& r : rows) {
    os << r.trial << ',' << format_double(r.time) << ',' << r.source << ',' << format_double(r.l1) << '\n';
  }
}

void write_result_files(const ScenarioResult& result, const std::string& path) {
  auto open = [](const std::string& p) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot open output file " + p);
    return f;
  };
  {
    auto f = open(path);
    write_rows_csv(f, result.rows);
  }
  if (!result.densities.empty()) {
    auto f = open(path + ".density.csv");
    write_densities_csv(f, result.densities);
  }
  if (!result.distances.empty()) {
    auto f = open(path + ".l1.csv");
    write_distances_csv(f, result.distances);
  }
}

std::vector<ScenarioResult> for_each_trial(std::size_t trials, std::size_t threads,
                                           const std::function<ScenarioResult(std::size_t)>& fn) {
  std::vector<ScenarioResult> results(trials);
  std::vector<std::exception_ptr> errors(trials);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < trials; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(threads, trials);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

ScenarioResult concatenate(std::vector<ScenarioResult> parts) {
  ScenarioResult all;
  for (auto& p : parts) {
    std::move(p.rows.begin(), p.rows.end(), std::back_inserter(all.rows));
    std::move(p.densities.begin(), p.densities.end(), std::back_inserter(all.densities));
    std::move(p.distances.begin(), p.distances.end(), std::back_inserter(all.distances));
  }
  return all;
}

// ---------------------------------------------------------------------------

ScenarioResult run_ou(const ExperimentConfig& config) {
  validate_config(config);
  const LinearSystem system = ou_system(config.kappa, config.sigma_b);
  const GaussianPrior prior = make_prior(config, 1);
  const DiffusionModel model = linear_model(system, prior);
  const ObservationModel obs = linear_observation(system);
  const TimeGrid grid(0.0, config.dt, config.steps);
  const PolicyFactory zero = zero_policy_factory();
  const PolicyFactory lqr = lqr_policy_factory(system);

  auto trial = [&](std::size_t i) {
    const StreamId base{config.seed, i};
    const Truth truth = simulate_truth(model, obs, grid, base);
    const auto oracle = kalman_oracle(system, prior, truth.record, grid);
    ScenarioResult r;
    sir_run(model, obs, truth.record, grid, sir_settings(config), base,
            [&](const FilterOutput& o) { r.rows.push_back(make_row(i, "sir", o, oracle[o.step])); });
    const FilterSettings fs = filter_settings(config, config.window);
    pipf_run(model, obs, truth.record, grid, fs, zero, base,
             [&](const FilterOutput& o) { r.rows.push_back(make_row(i, "pipf_zero", o, oracle[o.step])); });
    pipf_run(model, obs, truth.record, grid, fs, lqr, base,
             [&](const FilterOutput& o) { r.rows.push_back(make_row(i, "pipf_lqr", o, oracle[o.step])); });
    return r;
  };
  return concatenate(for_each_trial(config.trials, config.threads, trial));
}

ScenarioResult run_h_sweep(const ExperimentConfig& config, const std::vector<std::size_t>& h_list) {
  validate_config(config);
  if (h_list.empty()) throw ConfigError("h_list must not be empty");
  const LinearSystem system = ou_system(config.kappa, config.sigma_b);
  const GaussianPrior prior = make_prior(config, 1);
  const DiffusionModel model = linear_model(system, prior);
  const ObservationModel obs = linear_observation(system);
  const TimeGrid grid(0.0, config.dt, config.steps);
  const PolicyFactory factory = make_factory(config.controller, system, config);
  const std::string kind = estimator_tag("pipf", config.controller);

  auto trial = [&](std::size_t i) {
    const StreamId base{config.seed, i};
    const Truth truth = simulate_truth(model, obs, grid, base);
    const auto oracle = kalman_oracle(system, prior, truth.record, grid);
    ScenarioResult r;
    for (std::size_t h : h_list) {
      if (h < 1) throw ConfigError("window lengths must be at least 1");
      const std::string tag = estimator_tag(kind, "h" + std::to_string(h));
      pipf_run(model, obs, truth.record, grid, filter_settings(config, h), factory, base,
               [&](const FilterOutput& o) { r.rows.push_back(make_row(i, tag, o, oracle[o.step])); });
    }
    return r;
  };
  return concatenate(for_each_trial(config.trials, config.threads, trial));
}

ScenarioResult run_linear_nd(const ExperimentConfig& config, const std::vector<std::size_t>& n_list) {
  validate_config(config);
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  struct Setup {
    std::size_t n;
    LinearSystem system;
    GaussianPrior prior;
    DiffusionModel model;
    ObservationModel obs;
  };
  std::vector<Setup> setups;
  for (std::size_t n : n_list) {
    if (n < 1) throw ConfigError("dimensions must be at least 1");
    const Index dim = static_cast<Index>(n);
    LinearSystem system = random_stable_system(dim, config.sigma_b, StreamId{config.seed});
    GaussianPrior prior = make_prior(config, dim);
    DiffusionModel model = linear_model(system, prior);
    ObservationModel obs = linear_observation(system);
    setups.push_back(Setup{n, system, prior, std::move(model), std::move(obs)});
  }
  const TimeGrid grid(0.0, config.dt, config.steps);
  const std::string kind = estimator_tag("pipf", config.controller);

  auto trial = [&](std::size_t i) {
    ScenarioResult r;
    for (const auto& s : setups) {
      const StreamId base{config.seed, i};
      const Truth truth = simulate_truth(s.model, s.obs, grid, base);
      const auto oracle = kalman_oracle(s.system, s.prior, truth.record, grid);
      const std::string suffix = "n" + std::to_string(s.n);
      const std::string sir_tag = estimator_tag("sir", suffix);
      const std::string pipf_tag = estimator_tag(kind, suffix);
      sir_run(s.model, s.obs, truth.record, grid, sir_settings(config), base,
              [&](const FilterOutput& o) { r.rows.push_back(make_row(i, sir_tag, o, oracle[o.step])); });
      pipf_run(s.model, s.obs, truth.record, grid, filter_settings(config, config.window),
               make_factory(config.controller, s.system, config), base,
               [&](const FilterOutput& o) { r.rows.push_back(make_row(i, pipf_tag, o, oracle[o.step])); });
    }
    return r;
  };
  return concatenate(for_each_trial(config.trials, config.threads, trial));
}

ScenarioResult run_benes(const ExperimentConfig& config) {
  validate_config(config);
  const BenesParams params{config.mu, config.sigma_w, config.h1, config.h2, config.x0};
  const DiffusionModel model = benes_model(params);
  const ObservationModel obs = benes_observation(params);
  const TimeGrid grid(0.0, config.dt, config.steps);
  std::vector<std::size_t> snapshots;
  for (double t : config.snapshot_times) snapshots.push_back(grid.index_of(t));

  struct Estimator {
    std::string tag;
    std::optional<PolicyFactory> factory;  // empty: SIR
  };
  std::vector<Estimator> estimators{{"sir", std::nullopt}, {"pipf_zero", zero_policy_factory()}};
  if (config.controller != "zero") {
    estimators.push_back({estimator_tag("pipf", config.controller), make_factory(config.controller, {}, config)});
  }

  auto trial = [&](std::size_t i) {
    const StreamId base{config.seed, i};
    const Truth truth = simulate_truth(model, obs, grid, base);
    const auto posterior = benes_posterior_series(params, truth.record, grid);
    std::vector<Moments> oracle;
    oracle.reserve(posterior.size());
    for (const auto& p : posterior) {
      oracle.push_back({Vector::Constant(1, p.mean()), Matrix::Constant(1, 1, p.variance())});
    }
    // Shared evaluation grid per snapshot, wide enough for both modes plus kernel tails.
    std::vector<Vector> xs;
    std::vector<Vector> analytic;
    for (std::size_t j : snapshots) {
      const auto& p = posterior[j];
      const double spread = std::abs(p.b) + 8.0 * std::sqrt(p.var + config.bandwidth * config.bandwidth) + 1.0;
      xs.push_back(uniform_grid(p.a - spread, p.a + spread, config.kde_points));
      analytic.push_back(j == 0 ? Vector::Zero(config.kde_points) : benes_density(p, xs.back()));
    }

    ScenarioResult r;
    if (i == 0) {
      for (std::size_t s = 0; s < snapshots.size(); ++s) {
        for (Index q = 0; q < xs[s].size(); ++q) {
          r.densities.push_back({grid.time(snapshots[s]), xs[s](q), analytic[s](q), "analytic"});
        }
      }
    }
    for (const auto& est : estimators) {
      auto observer = [&](const FilterOutput& o) {
        r.rows.push_back(make_row(i, est.tag, o, oracle[o.step]));
        for (std::size_t s = 0; s < snapshots.size(); ++s) {
          if (snapshots[s] != o.step) continue;
          const KdeEstimate k = kde(o.posterior, xs[s], config.bandwidth);
          r.distances.push_back({i, o.time, est.tag, l1_density_distance(xs[s], k.density, analytic[s])});
          if (i == 0) {
            for (Index q = 0; q < xs[s].size(); ++q) {
              r.densities.push_back({o.time, xs[s](q), k.density(q), est.tag});
            }
          }
        }
      };
      if (est.factory) {
        pipf_run(model, obs, truth.record, grid, filter_settings(config, config.window), *est.factory, base,
                 observer);
      } else {
        sir_run(model, obs, truth.record, grid, sir_settings(config), base, observer);
      }
    }
    return r;
  };
  return concatenate(for_each_trial(config.trials, config.threads, trial));
}

}  // namespace pipf
