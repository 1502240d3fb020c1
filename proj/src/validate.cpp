#include "pipf/harness.hpp"
#include "pipf/models.hpp"

#include <cmath>
#include <sstream>

namespace pipf {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

InvariantCheck check_weights(std::uint64_t seed) {
  RandomStream rng(StreamId{seed, 0, StreamPurpose::test, 1});
  double worst_sum = 0.0;
  bool in_range = true;
  for (std::size_t rep = 0; rep < 100; ++rep) {
    const std::size_t K = 1 + rep * 7;
    std::vector<double> lw(K);
    for (auto& v : lw) v = 50.0 * rng.normal();
    const Vector w = normalize_log_weights(lw);
    worst_sum = std::max(worst_sum, std::abs(w.sum() - 1.0));
    const double g = effective_ratio(w);
    const double lo = 1.0 / static_cast<double>(K);
    in_range = in_range && g >= lo * (1.0 - 1e-12) && g <= 1.0 + 1e-12 && (w.array() >= 0.0).all();
  }
  return {"weight normalization and effective ratio range", worst_sum < 1e-12 && in_range,
          "max |sum w - 1| = " + num(worst_sum)};
}

InvariantCheck check_resampling(std::uint64_t seed) {
  Vector w(5);
  w << 0.1, 0.2, 0.3, 0.15, 0.25;
  const std::size_t K = w.size();
  const std::size_t reps = 10000;
  Vector counts = Vector::Zero(w.size());
  for (std::size_t r = 0; r < reps; ++r) {
    for (auto a : multinomial_indices(w, K, StreamId{seed, 0, StreamPurpose::resample, r})) counts(a) += 1.0;
  }
  const double total = static_cast<double>(K * reps);
  double worst = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    const double se = std::sqrt(w(i) * (1.0 - w(i)) / total);
    worst = std::max(worst, std::abs(counts(i) / total - w(i)) / se);
  }
  return {"multinomial resampling unbiasedness", worst < 3.0, "max deviation " + num(worst) + " standard errors"};
}

struct CostFixture {
  DiffusionModel model;
  ObservationModel obs;
  TimeGrid grid;
  StatePath path;
  ObservationRecord record;
};

CostFixture cost_fixture(std::uint64_t seed) {
  const LinearSystem sys = random_stable_system(2, 0.7, StreamId{seed});
  DiffusionModel model = linear_model(sys, GaussianPrior{Vector::Zero(2), Matrix::Identity(2, 2)});
  ObservationModel obs(
      2,
      [C = sys.C](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
        out = C * x;
        out(0) += std::sin(x(1));
      },
      0.7);
  const TimeGrid grid(0.0, 0.01, 40);
  const StreamId id{seed, 0, StreamPurpose::test, 2};
  const NoisePath truth_noise = draw_noise(id, 2, grid.steps(), grid.dt());
  const StatePath truth = simulate_path(model, grid, zero_policy(2), Vector::Ones(2), truth_noise);
  ObservationRecord record = generate_observations(obs, grid, truth, id.with_purpose(StreamPurpose::observation));
  // A controlled path with a non-trivial affine policy.
  std::vector<Matrix> gains(grid.points(), Matrix::Constant(2, 2, -0.3));
  std::vector<Vector> ff(grid.points(), Vector::Constant(2, 0.4));
  const ControlPolicy policy = ControlPolicy::affine(ControlPolicy::Kind::lqr, grid, gains, ff);
  const NoisePath noise = draw_noise(id.with_particle(1), 2, grid.steps(), grid.dt());
  StatePath path = simulate_path(model, grid, policy, Vector::Zero(2), noise);
  return CostFixture{std::move(model), std::move(obs), grid, std::move(path), std::move(record)};
}

StatePath sub_path(const StatePath& p, Index from, Index to) {
  return StatePath{p.states.middleCols(from, to - from + 1), p.controls.middleCols(from, to - from),
                   p.increments.middleCols(from, to - from)};
}

InvariantCheck check_summation_by_parts(std::uint64_t seed) {
  const CostFixture f = cost_fixture(seed);
  const PathCost a = window_cost(f.path, f.obs, f.record, f.grid, 0, f.grid.steps(), MeasurementForm::y_dh);
  const PathCost b = window_cost(f.path, f.obs, f.record, f.grid, 0, f.grid.steps(), MeasurementForm::h_dy);
  const double err = (a.partial - b.partial).cwiseAbs().maxCoeff();
  const double scale = 1.0 + a.partial.cwiseAbs().maxCoeff();
  return {"discrete summation by parts", err <= 1e-12 * scale, "max difference " + num(err)};
}

InvariantCheck check_additivity(std::uint64_t seed) {
  const CostFixture f = cost_fixture(seed);
  const std::size_t L = f.grid.steps();
  const PathCost whole = window_cost(f.path, f.obs, f.record, f.grid, 0, L);
  double err = 0.0;
  for (std::size_t b : {3u, 11u, 25u}) {
    for (std::size_t c : {b + 1, b + 7, L}) {
      const StatePath part = sub_path(f.path, static_cast<Index>(b), static_cast<Index>(c));
      const PathCost piece = window_cost(part, f.obs, f.record, f.grid, b, c);
      err = std::max(err, std::abs(whole.between(static_cast<Index>(b), static_cast<Index>(c)) - piece.total()));
    }
  }
  return {"path cost additivity", err <= 1e-10, "max difference " + num(err)};
}

InvariantCheck check_riccati(std::uint64_t seed) {
  // Symmetry and PSD on a random 3-d problem.
  const LinearSystem sys = random_stable_system(3, 0.5, StreamId{seed});
  const TimeGrid window(0.0, 0.01, 50);
  const Matrix Q = sys.C.transpose() * sys.C / (sys.sigma_b * sys.sigma_b);
  AffineLqProblem prob;
  for (std::size_t j = 0; j < window.steps(); ++j) {
    prob.A.push_back(sys.A);
    prob.c.push_back(Vector::Zero(3));
    prob.sigma.push_back(sys.sigma);
    prob.Q.push_back(Q);
    prob.r.push_back(Vector::Zero(3));
  }
  const AffineValueFunction v = solve_affine_lq(prob, window);
  double asym = 0.0;
  double min_eig = 0.0;
  for (const auto& P : v.P) {
    asym = std::max(asym, (P - P.transpose()).cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff());
  }

  // Scalar HJB (Riccati) residual, evaluated at the newer grid point, must shrink like dt.
  auto residual = [](double dt) {
    const double a = -0.7, s = 1.3, q = 2.0;
    const auto steps = static_cast<std::size_t>(std::lround(1.0 / dt));
    const TimeGrid w(0.0, dt, steps);
    AffineLqProblem p;
    for (std::size_t j = 0; j < steps; ++j) {
      p.A.push_back(Matrix::Constant(1, 1, a));
      p.c.push_back(Vector::Zero(1));
      p.sigma.push_back(Matrix::Constant(1, 1, s));
      p.Q.push_back(Matrix::Constant(1, 1, q));
      p.r.push_back(Vector::Zero(1));
    }
    const AffineValueFunction val = solve_affine_lq(p, w);
    double worst = 0.0;
    for (std::size_t j = 0; j < steps; ++j) {
      const double P0 = val.P[j](0, 0), P1 = val.P[j + 1](0, 0);
      // -dP/dt = 2aP - s^2 P^2 + q
      const double res = (P0 - P1) / dt - (2.0 * a * P0 - s * s * P0 * P0 + q);
      worst = std::max(worst, std::abs(res));
    }
    return worst;
  };
  const double r1 = residual(0.01), r2 = residual(0.005);
  const double order = r1 / r2;
  const bool ok = asym == 0.0 && min_eig >= -1e-12 && order > 1.6 && order < 2.4;
  return {"Riccati symmetry, PSD and first-order HJB residual", ok,
          "asymmetry " + num(asym) + ", min eigenvalue " + num(min_eig) + ", residual ratio " + num(order)};
}

InvariantCheck check_ilqr_equals_lqr(std::uint64_t seed) {
  double worst = 0.0;
  for (Index n : {1, 2, 3}) {
    const LinearSystem sys = random_stable_system(n, 0.8, StreamId{seed});
    const DiffusionModel model = linear_model(sys, GaussianPrior{Vector::Zero(n), Matrix::Identity(n, n)});
    const ObservationModel obs = linear_observation(sys);
    const TimeGrid grid(0.0, 0.01, 60);
    const StreamId id{seed, 0, StreamPurpose::test, 3};
    const NoisePath noise = draw_noise(id, n, grid.steps(), grid.dt());
    const StatePath truth = simulate_path(model, grid, zero_policy(n), Vector::Ones(n), noise);
    const ObservationRecord record =
        generate_observations(obs, grid, truth, id.with_purpose(StreamPurpose::observation));
    const std::size_t first = 10, last = 40;
    const LqrDesign lqr = lqr_design(sys, record, grid, first, last);
    const IlqrDesign ilqr = ilqr_design(model, obs, record, grid, first, last, Vector::Constant(n, 0.5));
    for (std::size_t j = 0; j < lqr.policy.gains().size(); ++j) {
      worst = std::max(worst, (lqr.policy.gains()[j] - ilqr.policy.gains()[j]).cwiseAbs().maxCoeff());
      worst = std::max(worst, (lqr.policy.feedforward()[j] - ilqr.policy.feedforward()[j]).cwiseAbs().maxCoeff());
    }
  }
  return {"iLQR equals LQR on linear problems", worst <= 1e-10, "max gain/feedforward difference " + num(worst)};
}

InvariantCheck check_determinism(std::uint64_t seed) {
  ExperimentConfig c = default_config("ou");
  c.steps = 40;
  c.particles = 64;
  c.window = 5;
  c.trials = 4;
  c.seed = seed;
  auto csv = [&](std::size_t threads) {
    c.threads = threads;
    std::ostringstream os;
    write_rows_csv(os, run_ou(c).rows);
    return os.str();
  };
  const std::string a = csv(1), b = csv(3);
  return {"determinism under parallel schedules", a == b, std::to_string(a.size()) + " bytes compared"};
}

}  // namespace

std::vector<InvariantCheck> run_invariant_suite(std::uint64_t seed) {
  return {check_weights(seed),      check_resampling(seed), check_summation_by_parts(seed),
          check_additivity(seed),   check_riccati(seed),    check_ilqr_equals_lqr(seed),
          check_determinism(seed)};
}

}  // namespace pipf
