#include "pipf/reference.hpp"

#include <cmath>
#include <numbers>

namespace pipf {

double sir_log_likelihood(const ObservationModel& obs, SirLikelihood kind, double t, const Vector& x,
                          const Vector& x_next, const Eigen::Ref<const Vector>& dy, double dt) {
  const Vector h_next = obs.sensor(t + dt, x_next);
  if (kind == SirLikelihood::gaussian_endpoint) {
    return -0.5 * obs.inv_var() * (dy - h_next * dt).squaredNorm() / dt;
  }
  const Vector h = obs.sensor(t, x);
  return -obs.inv_var() * (0.5 * h.squaredNorm() * dt - h_next.dot(dy));
}

FilterOutput sir_step(SirState& state, const DiffusionModel& model, const ObservationModel& obs,
                      const ObservationRecord& record, const TimeGrid& grid, const SirSettings& settings,
                      const StreamId& id) {
  const std::size_t j = state.index;
  const auto count = static_cast<std::size_t>(state.particles.cols());
  if (j >= grid.steps() || j >= record.steps()) throw UsageError("SIR step past the end of the grid");
  if (state.log_weights.size() != count) throw UsageError("one log-weight per particle required");

  const double t = grid.time(j);
  const double dt = grid.dt();
  const Index n = model.state_dim();
  const Index m = model.noise_dim();
  const StreamId noise_id = id.with_purpose(StreamPurpose::propagate).with_window(j + 1);
  const auto dy = record.increment(j);

  Vector x(n), b(n), dw(m), x_next(n);
  Matrix sigma(n, m);
  for (std::size_t k = 0; k < count; ++k) {
    const auto col = static_cast<Index>(k);
    RandomStream stream(noise_id.with_particle(k));
    for (Index i = 0; i < m; ++i) dw(i) = std::sqrt(dt) * stream.normal();
    x = state.particles.col(col);
    model.drift(t, x, b);
    model.dispersion(t, x, sigma);
    x_next = x + b * dt;
    x_next.noalias() += sigma * dw;
    if (!x_next.allFinite()) throw SimulationBlowup(j + 1, "SIR particle diverged");
    state.log_weights[k] += sir_log_likelihood(obs, settings.likelihood, t, x, x_next, dy, dt);
    state.particles.col(col) = x_next;
  }
  state.index = j + 1;

  Vector w = normalize_log_weights(state.log_weights);
  w /= w.sum();
  const double gamma = effective_ratio(w);
  FilterOutput out{j + 1, grid.time(j + 1), WeightedEnsemble(state.particles, w), gamma, false};
  if (settings.resample && gamma < settings.gamma_thres) {
    const auto ancestors = resample_indices(settings.scheme, w, count,
                                            id.with_purpose(StreamPurpose::resample).with_window(j + 1));
    state.particles = gather_columns(state.particles, ancestors);
    state.log_weights.assign(count, 0.0);
    out.resampled = true;
  }
  return out;
}

void sir_run(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
             const TimeGrid& grid, const SirSettings& settings, const StreamId& id, const FilterObserver& observer) {
  if (settings.particles < 1) throw UsageError("need at least one particle");
  SirState state{0, sample_initial(model, settings.particles, id.with_purpose(StreamPurpose::initial)),
                 std::vector<double>(settings.particles, 0.0)};
  observer(FilterOutput{0, grid.time(0), WeightedEnsemble::uniform(state.particles), 1.0, false});
  for (std::size_t j = 0; j < grid.steps(); ++j) observer(sir_step(state, model, obs, record, grid, settings, id));
}

std::vector<FilterOutput> sir_run(const DiffusionModel& model, const ObservationModel& obs,
                                  const ObservationRecord& record, const TimeGrid& grid,
                                  const SirSettings& settings, const StreamId& id) {
  std::vector<FilterOutput> outputs;
  outputs.reserve(grid.points());
  sir_run(model, obs, record, grid, settings, id, [&outputs](const FilterOutput& o) { outputs.push_back(o); });
  return outputs;
}

KalmanBucyState kalman_bucy_step(const KalmanBucyState& state, const LinearSystem& system,
                                 const Eigen::Ref<const Vector>& dy, double dt) {
  const double inv_var = 1.0 / (system.sigma_b * system.sigma_b);
  const Matrix& A = system.A;
  const Matrix& C = system.C;
  const Matrix& P = state.cov;
  KalmanBucyState next;
  next.mean = state.mean + A * state.mean * dt + (P * C.transpose() * inv_var) * (dy - C * state.mean * dt);
  const Matrix dP = A * P + P * A.transpose() - inv_var * P * C.transpose() * C * P +
                    system.sigma * system.sigma.transpose();
  next.cov = P + dP * dt;
  next.cov = 0.5 * (next.cov + next.cov.transpose()).eval();
  Eigen::LLT<Matrix> llt(next.cov);
  if (llt.info() != Eigen::Success || !next.mean.allFinite()) {
    throw OracleFailure("Kalman-Bucy covariance lost positive definiteness; reduce dt");
  }
  return next;
}

std::vector<KalmanBucyState> kalman_bucy_run(const LinearSystem& system, const GaussianPrior& prior,
                                             const ObservationRecord& record, const TimeGrid& grid) {
  if (record.steps() < grid.steps()) throw UsageError("observation record shorter than the grid");
  std::vector<KalmanBucyState> out;
  out.reserve(grid.points());
  out.push_back(KalmanBucyState{prior.mean, prior.cov});
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    out.push_back(kalman_bucy_step(out.back(), system, record.increment(j), grid.dt()));
  }
  return out;
}

namespace {

void check(const BenesParams& params) {
  if (!(params.sigma_w > 0.0)) throw ModelError("Benes sigma_W must be positive");
  if (params.h1 == 0.0) throw ModelError("Benes h1 must be non-zero");
}

BenesPosterior assemble(const BenesParams& p, double t, double weighted_sum) {
  const double c = p.h1 * p.sigma_w * t;
  const double th = std::tanh(c);
  BenesPosterior post;
  post.b = (p.mu / p.h1) * th;
  post.var = (p.sigma_w / p.h1) * th;
  const double psi = weighted_sum / std::sinh(c);
  post.a = p.sigma_w * psi * th + (p.h2 + p.x0) / std::cosh(c) - p.h2;
  const double exponent = (2.0 * post.a * post.b / p.sigma_w) / th;
  post.omega = exponent > 700.0 ? 0.0 : 1.0 / (1.0 + std::exp(exponent));
  return post;
}

}  // namespace

BenesPosterior benes_posterior(const BenesParams& params, const ObservationRecord& record, const TimeGrid& grid,
                               std::size_t j) {
  check(params);
  if (j == 0) throw UsageError("Benes posterior is undefined at t = 0");
  if (j > record.steps()) throw UsageError("time beyond the observation record");
  const double c = params.h1 * params.sigma_w;
  double sum = 0.0;
  for (std::size_t i = 0; i < j; ++i) sum += std::sinh(c * grid.time(i)) * record.increment(i)(0);
  return assemble(params, grid.time(j), sum);
}

std::vector<BenesPosterior> benes_posterior_series(const BenesParams& params, const ObservationRecord& record,
                                                   const TimeGrid& grid) {
  check(params);
  if (record.steps() < grid.steps()) throw UsageError("observation record shorter than the grid");
  const double c = params.h1 * params.sigma_w;
  std::vector<BenesPosterior> out(grid.points());
  out[0] = BenesPosterior{1.0, params.x0, 0.0, 0.0};
  double sum = 0.0;
  for (std::size_t j = 1; j <= grid.steps(); ++j) {
    sum += std::sinh(c * grid.time(j - 1)) * record.increment(j - 1)(0);
    out[j] = assemble(params, grid.time(j), sum);
  }
  return out;
}

Vector benes_density(const BenesPosterior& post, const Vector& x) {
  if (!(post.var > 0.0)) throw UsageError("Benes density needs a positive variance");
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * post.var);
  const auto gauss = [&](double centre) {
    return ((x.array() - centre).square() / (-2.0 * post.var)).exp() * norm;
  };
  return (post.omega * gauss(post.a - post.b) + (1.0 - post.omega) * gauss(post.a + post.b)).matrix();
}

}  // namespace pipf
