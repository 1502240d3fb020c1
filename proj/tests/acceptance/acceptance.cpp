// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers as arguments to run a subset.

#include "pipf/harness.hpp"
#include "pipf/metrics.hpp"
#include "pipf/models.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace pipf;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ExperimentConfig ou_benchmark() {
  ExperimentConfig c = default_config("ou");  // L=600, dt=0.01, K=500, H=20, 50 trials
  c.seed = 2024;
  return c;
}

// Mean of `field` over rows of one estimator with step in [from, to].
double average(const std::vector<ResultRow>& rows, const std::string& tag, std::size_t from, std::size_t to,
               double ResultRow::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.estimator == tag && r.step >= from && r.step <= to) {
      sum += r.*field;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::nan("");
}

// ---------------------------------------------------------------------------

Outcome sir_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const LinearSystem sys = ou_system(1.0, 1.0);
  const DiffusionModel model = linear_model(sys, GaussianPrior{Vector::Zero(1), Matrix::Identity(1, 1)});
  const ObservationModel obs = linear_observation(sys);
  const TimeGrid grid(0.0, 0.01, 50);
  const StreamId base{7, 0};
  const Matrix x0 = sample_initial(model, 1, base.with_purpose(StreamPurpose::truth_initial));
  const StatePath truth = simulate_path(model, grid, zero_policy(1), x0.col(0),
                                        draw_noise(base.with_purpose(StreamPurpose::truth), 1, 50, 0.01));
  const ObservationRecord record =
      generate_observations(obs, grid, truth, base.with_purpose(StreamPurpose::observation));

  FilterSettings fs;
  fs.particles = 200;
  fs.window = 1;
  fs.resample = false;
  SirSettings ss;
  ss.particles = 200;
  ss.resample = false;
  const auto pipf = pipf_run(model, obs, record, grid, fs, zero_policy_factory(), base);
  const auto sir = sir_run(model, obs, record, grid, ss, base);

  double worst = 0.0;
  double position = 0.0;
  for (std::size_t j = 0; j < pipf.size(); ++j) {
    const Vector& a = pipf[j].posterior.weights();
    const Vector& b = sir[j].posterior.weights();
    const Vector d = a.array().log() - b.array().log();
    worst = std::max(worst, (d.array() - d(0)).abs().maxCoeff());
    position = std::max(position, (pipf[j].posterior.particles() - sir[j].posterior.particles()).cwiseAbs().maxCoeff());
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-10 && position == 0.0 && elapsed < 1.0,
          "max |dlog w - c| = " + fmt(worst) + ", max particle difference " + fmt(position) + ", " +
              fmt(elapsed, 2) + " s"};
}

Outcome oracle_consistency() {
  const ExperimentConfig c = ou_benchmark();
  const LinearSystem sys = ou_system(c.kappa, c.sigma_b);
  const GaussianPrior prior{Vector::Constant(1, c.m0), Matrix::Constant(1, 1, c.p0)};
  const DiffusionModel model = linear_model(sys, prior);
  const ObservationModel obs = linear_observation(sys);
  const TimeGrid grid(0.0, c.dt, c.steps);
  FilterSettings fs;
  fs.particles = c.particles;
  fs.window = c.window;
  fs.gamma_thres = c.gamma_thres;

  // diff[j] collects PIPF-LQR mean minus Kalman-Bucy mean at step j, one entry per trial.
  std::vector<std::vector<double>> diff(grid.points());
  double kb_var = 0.0;
  for (std::size_t i = 0; i < c.trials; ++i) {
    const StreamId base{c.seed, i};
    const Matrix x0 = sample_initial(model, 1, base.with_purpose(StreamPurpose::truth_initial));
    const StatePath truth =
        simulate_path(model, grid, zero_policy(1), x0.col(0),
                      draw_noise(base.with_purpose(StreamPurpose::truth), 1, grid.steps(), grid.dt()));
    const ObservationRecord record =
        generate_observations(obs, grid, truth, base.with_purpose(StreamPurpose::observation));
    const auto kb = kalman_bucy_run(sys, prior, record, grid);
    kb_var = kb.back().cov(0, 0);
    pipf_run(model, obs, record, grid, fs, lqr_policy_factory(sys), base, [&](const FilterOutput& o) {
      diff[o.step].push_back(o.posterior.mean()(0) - kb[o.step].mean(0));
    });
  }
  std::size_t outside = 0;
  double worst = 0.0;
  for (const auto& d : diff) {
    const double n = static_cast<double>(d.size());
    double mean = 0.0, sq = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    for (double v : d) sq += (v - mean) * (v - mean);
    const double se = std::sqrt(sq / (n - 1.0) / n);
    const double z = se > 0.0 ? std::abs(mean) / se : 0.0;
    worst = std::max(worst, z);
    if (z > 3.0) ++outside;
  }
  const double target = std::sqrt(2.0) - 1.0;
  const double rel = std::abs(kb_var - target) / target;
  return {outside == 0 && rel < 0.02,
          "steps outside 3 SE: " + std::to_string(outside) + "/" + std::to_string(diff.size()) +
              " (max " + fmt(worst, 3) + " SE); stationary KB variance " + fmt(kb_var, 6) + " vs " +
              fmt(target, 6) + " (rel " + fmt(rel, 2) + ")"};
}

Outcome estimator_orderings() {
  ExperimentConfig c = ou_benchmark();
  const std::size_t from = c.steps - c.steps / 3;
  const auto with = run_ou(c).rows;
  const double lqr = average(with, "pipf_lqr", from, c.steps, &ResultRow::mse_mean);
  const double zero = average(with, "pipf_zero", from, c.steps, &ResultRow::mse_mean);
  const double sir = average(with, "sir", from, c.steps, &ResultRow::mse_mean);

  c.resample = false;
  const auto without = run_ou(c).rows;
  const double g_lqr = average(without, "pipf_lqr", c.steps, c.steps, &ResultRow::effective_ratio);
  const double g_zero = average(without, "pipf_zero", c.steps, c.steps, &ResultRow::effective_ratio);
  const double g_sir = average(without, "sir", c.steps, c.steps, &ResultRow::effective_ratio);

  const bool mse_ok = lqr < zero && zero < sir;
  const bool gamma_ok = g_lqr > g_zero && g_zero > g_sir;
  return {mse_ok && gamma_ok, "final-third mse lqr " + fmt(lqr) + ", zero " + fmt(zero) + ", sir " + fmt(sir) +
                                  (mse_ok ? " (ordered)" : " (NOT ordered)") + "; final gamma lqr " + fmt(g_lqr) +
                                  ", zero " + fmt(g_zero) + ", sir " + fmt(g_sir) +
                                  (gamma_ok ? " (ordered)" : " (NOT ordered)")};
}

Outcome h_sweep_trend() {
  const ExperimentConfig c = ou_benchmark();
  const std::vector<std::size_t> hs{1, 20, 60};
  const auto rows = run_h_sweep(c, hs).rows;
  std::map<std::size_t, double> mse;
  for (auto h : hs) mse[h] = average(rows, "pipf_lqr_h" + std::to_string(h), 0, c.steps, &ResultRow::mse_mean);
  return {mse[20] <= mse[1], "mean mse H=1 " + fmt(mse[1]) + ", H=20 " + fmt(mse[20]) + "; reported H=60 " +
                                 fmt(mse[60])};
}

Outcome dimension_scaling() {
  ExperimentConfig c = default_config("linear_nd");
  c.seed = 2024;
  c.resample = false;
  const std::vector<std::size_t> ns{1, 2, 4, 8};
  const auto rows = run_linear_nd(c, ns).rows;
  bool ok = true;
  std::string detail;
  for (auto n : ns) {
    const std::string s = "_n" + std::to_string(n);
    const double g_pipf = average(rows, "pipf_lqr" + s, c.steps, c.steps, &ResultRow::effective_ratio);
    const double g_sir = average(rows, "sir" + s, c.steps, c.steps, &ResultRow::effective_ratio);
    ok = ok && g_pipf - g_sir >= 0.0;
    detail += "n=" + std::to_string(n) + ": " + fmt(g_pipf, 3) + " vs " + fmt(g_sir, 3) + "; ";
  }
  return {ok, "final gamma pipf_lqr vs sir " + detail};
}

Outcome benes_validation() {
  ExperimentConfig c = default_config("benes");  // L=6000, dt=0.001, H=10, K=500, iLQR
  c.seed = 2024;
  c.trials = 20;
  const BenesParams params{c.mu, c.sigma_w, c.h1, c.h2, c.x0};
  const DiffusionModel model = benes_model(params);
  const ObservationModel obs = benes_observation(params);
  const TimeGrid grid(0.0, c.dt, c.steps);

  // Brute-force oracle: K = 1e5 SIR on trial 0's record, compared with the analytic density.
  const StreamId base{c.seed, 0};
  const Matrix x0 = sample_initial(model, 1, base.with_purpose(StreamPurpose::truth_initial));
  const StatePath truth =
      simulate_path(model, grid, zero_policy(1), x0.col(0),
                    draw_noise(base.with_purpose(StreamPurpose::truth), 1, grid.steps(), grid.dt()));
  const ObservationRecord record =
      generate_observations(obs, grid, truth, base.with_purpose(StreamPurpose::observation));
  const auto posterior = benes_posterior_series(params, record, grid);
  SirSettings big;
  big.particles = 100000;
  double oracle_worst = 0.0;
  std::string oracle_detail;
  sir_run(model, obs, record, grid, big, base.with_window(1u << 20), [&](const FilterOutput& o) {
    for (double t : c.snapshot_times) {
      if (grid.index_of(t) != o.step) continue;
      const auto& p = posterior[o.step];
      const double spread = std::abs(p.b) + 8.0 * std::sqrt(p.var + c.bandwidth * c.bandwidth) + 1.0;
      const Vector x = uniform_grid(p.a - spread, p.a + spread, c.kde_points);
      const double l1 = l1_density_distance(x, kde(o.posterior, x, c.bandwidth).density, benes_density(p, x));
      oracle_worst = std::max(oracle_worst, l1);
      oracle_detail += fmt(l1, 3) + (p.bimodal() ? "(bimodal) " : " ");
    }
  });

  const ScenarioResult result = run_benes(c);
  std::map<double, std::pair<double, double>> l1;  // time -> (sum, max)
  for (const auto& d : result.distances) {
    if (d.source != "pipf_ilqr") continue;
    auto& e = l1[d.time];
    e.first += d.l1;
    e.second = std::max(e.second, d.l1);
  }
  bool l1_ok = l1.size() == c.snapshot_times.size();
  std::string pipf_detail;
  for (const auto& [t, e] : l1) {
    const double mean = e.first / static_cast<double>(c.trials);
    l1_ok = l1_ok && mean < 0.3;
    pipf_detail += "t=" + fmt(t, 2) + " mean " + fmt(mean, 3) + " max " + fmt(e.second, 3) + "; ";
  }
  const double mse_ilqr = average(result.rows, "pipf_ilqr", 0, c.steps, &ResultRow::mse_mean);
  const double mse_sir = average(result.rows, "sir", 0, c.steps, &ResultRow::mse_mean);
  const bool ok = oracle_worst < 0.1 && l1_ok && mse_ilqr < mse_sir;
  return {ok, "SIR(1e5) vs analytic L1 " + oracle_detail + "; PIPF-iLQR L1 " + pipf_detail + "mse ilqr " +
                  fmt(mse_ilqr) + " vs sir " + fmt(mse_sir)};
}

Outcome property_suites() {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  std::string failed;
  for (const auto& check : run_invariant_suite(2024)) {
    if (!check.passed) failed += check.name + " (" + check.detail + "); ";
    ok = ok && check.passed;
  }
  const double elapsed = seconds_since(start);
  return {ok && elapsed < 30.0, (failed.empty() ? "all invariants hold" : "failed: " + failed) + ", " +
                                    fmt(elapsed, 2) + " s"};
}

Outcome zero_variance_tendency() {
  const LinearSystem sys = ou_system(1.0, 1.0);
  const DiffusionModel model = linear_model(sys, GaussianPrior{Vector::Zero(1), Matrix::Identity(1, 1)});
  const ObservationModel obs = linear_observation(sys);
  const TimeGrid grid(0.0, 0.0005, 1000);  // T = 0.5
  const StreamId base{2024, 0};
  const StatePath truth =
      simulate_path(model, grid, zero_policy(1), Vector::Constant(1, 0.8),
                    draw_noise(base.with_purpose(StreamPurpose::truth), 1, grid.steps(), grid.dt()));
  const ObservationRecord record =
      generate_observations(obs, grid, truth, base.with_purpose(StreamPurpose::observation));

  // Every particle starts at the same point, so only the control decides the weight spread.
  const std::size_t K = 1000;
  const ProposalPrior start{Matrix::Constant(1, K, 0.8), std::vector<double>(K, 0.0)};
  const ControlPolicy lqr = lqr_design(sys, record, grid, 0, grid.steps()).policy;
  auto variance = [&](const ControlPolicy& policy) {
    const auto s = smoothing_posterior(model, obs, record, grid, 0, grid.steps(), K, policy,
                                       base.with_purpose(StreamPurpose::propagate), start);
    double mean = 0.0, sq = 0.0;
    for (double v : s.log_weights) mean += v;
    mean /= static_cast<double>(K);
    for (double v : s.log_weights) sq += (v - mean) * (v - mean);
    return sq / static_cast<double>(K - 1);
  };
  const double v_lqr = variance(lqr);
  const double v_zero = variance(zero_policy(1));
  return {v_lqr <= 0.1 * v_zero, "log-weight variance lqr " + fmt(v_lqr) + " vs zero " + fmt(v_zero) +
                                     " (ratio " + fmt(v_lqr / v_zero, 3) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"SIR equivalence", sir_equivalence},
      {"oracle consistency (Kalman-Bucy)", oracle_consistency},
      {"estimator orderings", estimator_orderings},
      {"window length trend", h_sweep_trend},
      {"dimension scaling", dimension_scaling},
      {"Benes validation", benes_validation},
      {"property suites", property_suites},
      {"zero-variance tendency", zero_variance_tendency},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %zu %s: %s [%.1f s]\n", out.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                out.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
    if (!out.passed) ++failures;
  }
  return failures ? 1 : 0;
}
