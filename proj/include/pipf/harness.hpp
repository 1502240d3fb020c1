#pragma once

#include "pipf/core.hpp"
#include "pipf/filter.hpp"
#include "pipf/reference.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pipf {

struct ExperimentConfig {
  std::string scenario = "ou";  // ou | linear_nd | benes
  double kappa = 1.0;
  double sigma_b = 1.0;
  double m0 = 0.0;
  double p0 = 1.0;
  std::size_t steps = 600;
  double dt = 0.01;
  std::size_t particles = 500;
  std::size_t window = 20;
  std::string controller = "lqr";  // zero | lqr | ilqr
  double gamma_thres = 0.5;
  bool resample = true;
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::string out = "results.csv";
  std::size_t threads = 0;  // 0: hardware concurrency

  std::vector<std::size_t> h_list{1, 5, 10, 20, 40};
  std::vector<std::size_t> n_list{1, 2, 4, 8};

  double mu = 1.0;
  double sigma_w = 1.0;
  double h1 = 1.0;
  double h2 = 0.0;
  double x0 = -5.0;
  std::vector<double> snapshot_times{2.0, 4.0, 6.0};
  double bandwidth = 0.2;
  std::size_t kde_points = 801;
  std::size_t ilqr_iterations = 10;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Full-scale defaults for each scenario.
ExperimentConfig default_config(const std::string& scenario);

/// Registers every config field as a `--name` option of `app`.
void bind_config(CLI::App& app, ExperimentConfig& config);
/// TOML text with one `key = value` line per field.
std::string serialize_config(const ExperimentConfig& config);
/// Parses TOML produced by serialize_config (or hand-written); missing keys keep
/// the values already in `base`. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
/// Throws ConfigError when a field violates a model or harness constraint.
void validate_config(const ExperimentConfig& config);

struct ResultRow {
  std::size_t trial = 0;
  std::size_t step = 0;
  double time = 0.0;
  std::string estimator;
  double mse_mean = 0.0;
  double mse_cov = 0.0;
  double effective_ratio = 1.0;
  bool resampled = false;
  Vector mean;
};

struct DensityRow {
  double time = 0.0;
  double x = 0.0;
  double density = 0.0;
  std::string source;
};

struct DistanceRow {
  std::size_t trial = 0;
  double time = 0.0;
  std::string source;
  double l1 = 0.0;
};

struct ScenarioResult {
  std::vector<ResultRow> rows;
  std::vector<DensityRow> densities;
  std::vector<DistanceRow> distances;
};

/// Per-step, per-estimator rows in CSV form. The header is
/// trial,step,time,estimator,mse_mean,mse_cov,effective_ratio,resampled,mean_0,...,mean_{n-1}
/// with n the largest state dimension; shorter rows are padded with empty fields.
void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_densities_csv(std::ostream& os, const std::vector<DensityRow>& rows);
void write_distances_csv(std::ostream& os, const std::vector<DistanceRow>& rows);
/// Writes rows to `path` and, when present, densities to `<path>.density.csv`
/// and L1 distances to `<path>.l1.csv`.
void write_result_files(const ScenarioResult& result, const std::string& path);

/// Runs fn(trial) for every trial on `threads` workers; results are gathered in
/// trial order so the output does not depend on scheduling.
std::vector<ScenarioResult> for_each_trial(std::size_t trials, std::size_t threads,
                                           const std::function<ScenarioResult(std::size_t)>& fn);
ScenarioResult concatenate(std::vector<ScenarioResult> parts);

/// SIR, PIPF-zero and PIPF-LQR on the scalar OU model, scored against Kalman-Bucy.
ScenarioResult run_ou(const ExperimentConfig& config);
/// PIPF with `config.controller` for each window length, truth shared across H.
ScenarioResult run_h_sweep(const ExperimentConfig& config, const std::vector<std::size_t>& h_list);
/// SIR and PIPF with `config.controller` on random stable n-dimensional systems.
ScenarioResult run_linear_nd(const ExperimentConfig& config, const std::vector<std::size_t>& n_list);
/// SIR, PIPF-zero and PIPF with `config.controller` on the Benes model, scored
/// against the closed-form posterior, with KDE snapshots.
ScenarioResult run_benes(const ExperimentConfig& config);

/// Estimator tags used in result rows.
std::string estimator_tag(const std::string& kind, const std::string& suffix = {});

// ---------------------------------------------------------------------------
// Invariant suite behind `pipf validate`.

struct InvariantCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<InvariantCheck> run_invariant_suite(std::uint64_t seed);

}  // namespace pipf
