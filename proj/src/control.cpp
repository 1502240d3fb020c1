#include "pipf/control.hpp"

#include "pipf/ensemble.hpp"

#include <cmath>
#include <limits>

namespace pipf {

ControlPolicy zero_policy(Index control_dim) { return ControlPolicy::zero(control_dim); }

AffineValueFunction solve_affine_lq(const AffineLqProblem& problem, const TimeGrid& window) {
  const std::size_t steps = window.steps();
  if (problem.A.size() != steps || problem.c.size() != steps || problem.sigma.size() != steps ||
      problem.Q.size() != steps || problem.r.size() != steps) {
    throw UsageError("LQ problem needs one entry per window step");
  }
  const Index n = problem.A.front().rows();
  const double dt = window.dt();

  AffineValueFunction value{window, std::vector<Matrix>(steps + 1), std::vector<Vector>(steps + 1)};
  value.P[steps] = Matrix::Zero(n, n);
  value.s[steps] = Vector::Zero(n);
  for (std::size_t j = steps; j > 0; --j) {
    const Matrix& P = value.P[j];
    const Vector& s = value.s[j];
    const Matrix& A = problem.A[j - 1];
    const Matrix gain = problem.sigma[j - 1] * problem.sigma[j - 1].transpose();
    Matrix next = P + dt * (A.transpose() * P + P * A - P * gain * P + problem.Q[j - 1]);
    value.P[j - 1] = 0.5 * (next + next.transpose());
    value.s[j - 1] = s + dt * ((A - gain * P).transpose() * s + P * problem.c[j - 1] - problem.r[j - 1]);
    if (!value.P[j - 1].allFinite() || !value.s[j - 1].allFinite()) {
      throw DesignError("Riccati recursion diverged at window step " + std::to_string(j - 1) +
                        "; try a smaller dt");
    }
  }
  return value;
}

ControlPolicy affine_policy(ControlPolicy::Kind kind, const AffineValueFunction& value,
                            const std::vector<Matrix>& sigma) {
  const std::size_t points = value.P.size();
  std::vector<Matrix> gains(points);
  std::vector<Vector> feedforward(points);
  for (std::size_t j = 0; j < points; ++j) {
    const Matrix& sig = sigma[std::min(j, sigma.size() - 1)];
    gains[j] = -sig.transpose() * value.P[j];
    feedforward[j] = -sig.transpose() * value.s[j];
  }
  return ControlPolicy::affine(kind, value.window, std::move(gains), std::move(feedforward));
}

LqrDesign lqr_design(const LinearSystem& system, const ObservationRecord& record, const TimeGrid& grid,
                     std::size_t first, std::size_t last) {
  const Index n = system.A.rows();
  if (system.A.cols() != n || system.sigma.rows() != n || system.C.cols() != n ||
      system.C.rows() != record.obs_dim()) {
    throw ModelError("inconsistent linear system dimensions");
  }
  if (!(system.sigma_b > 0.0)) throw ModelError("sigma_B must be positive");
  const TimeGrid window = grid.window(first, last);
  if (last > record.steps()) throw UsageError("window extends past the observation record");
  const std::size_t steps = window.steps();
  const double inv_var = 1.0 / (system.sigma_b * system.sigma_b);

  AffineLqProblem problem;
  problem.A.assign(steps, system.A);
  problem.c.assign(steps, Vector::Zero(n));
  problem.sigma.assign(steps, system.sigma);
  problem.Q.assign(steps, inv_var * system.C.transpose() * system.C);
  problem.r.resize(steps);
  for (std::size_t j = 0; j < steps; ++j) {
    problem.r[j] = system.C.transpose() * record.increment(first + j) * (inv_var / grid.dt());
  }
  AffineValueFunction value = solve_affine_lq(problem, window);
  ControlPolicy policy = affine_policy(ControlPolicy::Kind::lqr, value, problem.sigma);
  return LqrDesign{std::move(policy), std::move(value)};
}

namespace {

struct Rollout {
  Matrix states;
  Matrix controls;
  double cost = std::numeric_limits<double>::infinity();
};

AffineLqProblem linearize(const DiffusionModel& model, const ObservationModel& obs,
                          const ObservationRecord& record, const TimeGrid& grid, std::size_t first,
                          const Matrix& states, std::vector<Matrix>* jacobians) {
  const auto steps = static_cast<std::size_t>(states.cols() - 1);
  const double dt = grid.dt();
  const double inv_var = obs.inv_var();
  AffineLqProblem problem;
  problem.A.resize(steps);
  problem.c.resize(steps);
  problem.sigma.resize(steps);
  problem.Q.resize(steps);
  problem.r.resize(steps);
  if (jacobians) jacobians->resize(steps + 1);
  for (std::size_t j = 0; j < steps; ++j) {
    const double t = grid.time(first + j);
    const Vector x = states.col(static_cast<Index>(j));
    const Matrix A = model.drift_jacobian(t, x);
    problem.c[j] = model.drift(t, x) - A * x;
    problem.sigma[j] = model.dispersion(t, x);
    // Gauss-Newton quadratization of 1/2|h|^2/sigma_B^2 - h'dY/(sigma_B^2 dt).
    const Matrix H = obs.jacobian(t, x);
    const Vector h = obs.sensor(t, x);
    const Vector grad = inv_var * H.transpose() * (h - record.increment(first + j) / dt);
    problem.Q[j] = inv_var * H.transpose() * H;
    problem.r[j] = problem.Q[j] * x - grad;
    if (jacobians) (*jacobians)[j] = A;
    problem.A[j] = A;
  }
  if (jacobians) {
    (*jacobians)[steps] = model.drift_jacobian(grid.time(first + steps), states.col(static_cast<Index>(steps)));
  }
  return problem;
}

Rollout forward_pass(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
                     const TimeGrid& grid, std::size_t first, const Vector& x_init, const Rollout& nominal,
                     const AffineValueFunction& value, const std::vector<Matrix>& sigma, double alpha) {
  const Index n = model.state_dim();
  const Index m = model.noise_dim();
  const auto steps = static_cast<Index>(nominal.controls.cols());
  const double dt = grid.dt();
  Rollout out;
  out.states.resize(n, steps + 1);
  out.controls.resize(m, steps);
  out.states.col(0) = x_init;
  for (Index j = 0; j < steps; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const double t = grid.time(first + ju);
    const Vector x_ref = nominal.states.col(j);
    const Vector x = out.states.col(j);
    const Vector target = -sigma[ju].transpose() * (value.P[ju] * x_ref + value.s[ju]);
    const Matrix gain = -sigma[ju].transpose() * value.P[ju];
    out.controls.col(j) = nominal.controls.col(j) + alpha * (target - nominal.controls.col(j)) + gain * (x - x_ref);
    out.states.col(j + 1) = x + (model.drift(t, x) + model.dispersion(t, x) * out.controls.col(j)) * dt;
    if (!out.states.col(j + 1).allFinite()) return out;
  }
  out.cost = nominal_cost(obs, record, grid, first, out.states, out.controls);
  return out;
}

}  // namespace

double nominal_cost(const ObservationModel& obs, const ObservationRecord& record, const TimeGrid& grid,
                    std::size_t first, const Matrix& states, const Matrix& controls) {
  const auto steps = static_cast<std::size_t>(controls.cols());
  StatePath path{states, controls, Matrix::Zero(controls.rows(), controls.cols())};
  return window_cost(path, obs, record, grid, first, first + steps).total();
}

IlqrDesign ilqr_design(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
                       const TimeGrid& grid, std::size_t first, std::size_t last, const Vector& x_init,
                       const IlqrOptions& options) {
  if (options.iterations < 1) throw UsageError("iLQR needs at least one iteration");
  if (x_init.size() != model.state_dim()) throw ModelError("initial state dimension mismatch");
  const TimeGrid window = grid.window(first, last);
  if (last > record.steps()) throw UsageError("window extends past the observation record");
  const std::size_t steps = window.steps();

  Rollout nominal;
  nominal.controls = Matrix::Zero(model.noise_dim(), static_cast<Index>(steps));
  nominal.states.resize(model.state_dim(), static_cast<Index>(steps + 1));
  nominal.states.col(0) = x_init;
  for (std::size_t j = 0; j < steps; ++j) {
    const auto x = nominal.states.col(static_cast<Index>(j));
    nominal.states.col(static_cast<Index>(j + 1)) = x + model.drift(grid.time(first + j), x) * grid.dt();
  }
  if (!nominal.states.allFinite()) throw SimulationBlowup(0, "iLQR initial rollout diverged");
  nominal.cost = nominal_cost(obs, record, grid, first, nominal.states, nominal.controls);

  IlqrDesign design{ControlPolicy::zero(model.noise_dim()), {}, {window, {}, {}}, {nominal.cost}};
  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    const AffineLqProblem problem = linearize(model, obs, record, grid, first, nominal.states, nullptr);
    const AffineValueFunction value = solve_affine_lq(problem, window);
    bool accepted = false;
    double alpha = 1.0;
    for (std::size_t h = 0; h <= options.max_halvings; ++h, alpha *= options.backtrack_factor) {
      Rollout trial = forward_pass(model, obs, record, grid, first, x_init, nominal, value, problem.sigma, alpha);
      if (std::isfinite(trial.cost) && trial.cost < nominal.cost) {
        nominal = std::move(trial);
        design.cost_history.push_back(nominal.cost);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  std::vector<Matrix> jacobians;
  const AffineLqProblem problem = linearize(model, obs, record, grid, first, nominal.states, &jacobians);
  design.value = solve_affine_lq(problem, window);
  design.policy = affine_policy(ControlPolicy::Kind::ilqr, design.value, problem.sigma);
  design.nominal = NominalTrajectory{std::move(nominal.states), std::move(nominal.controls), std::move(jacobians)};
  return design;
}

PathIntegralEstimate path_integral_control_estimate(const DiffusionModel& model, const ObservationModel& obs,
                                                    const ObservationRecord& record, const TimeGrid& grid,
                                                    const ControlPolicy& policy, std::size_t first,
                                                    const Vector& x, std::size_t samples, std::size_t last,
                                                    const StreamId& id) {
  if (samples < 2) throw UsageError("path integral estimate needs at least two samples");
  const TimeGrid window = grid.window(first, last);
  const Index m = model.noise_dim();
  const double dt = grid.dt();

  std::vector<double> log_w(samples);
  Matrix first_noise(m, static_cast<Index>(samples));
  NoisePath noise;
  StatePath path;
  for (std::size_t i = 0; i < samples; ++i) {
    draw_noise(id.with_particle(i), m, window.steps(), dt, noise);
    simulate_path(model, window, policy, x, noise, path);
    log_w[i] = -window_cost(path, obs, record, grid, first, last).total();
    first_noise.col(static_cast<Index>(i)) = noise.increments.col(0);
  }
  const Vector w = normalize_log_weights(log_w);

  PathIntegralEstimate est;
  const Matrix drive = first_noise / dt;
  est.correction = drive * w;
  est.control = policy.evaluate(grid.time(first), x) + est.correction;
  const Matrix centred = drive.colwise() - est.correction;
  est.standard_error = (centred.array().square().rowwise() * w.array().square().transpose()).rowwise().sum().sqrt();
  const Eigen::Map<const Vector> lw(log_w.data(), static_cast<Index>(samples));
  est.log_weight_variance = (lw.array() - lw.mean()).square().sum() / static_cast<double>(samples - 1);
  est.effective_ratio = effective_ratio(w);
  return est;
}

}  // namespace pipf
