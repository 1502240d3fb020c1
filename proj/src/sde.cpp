#include "pipf/sde.hpp"

#include <cmath>

namespace pipf {

namespace {

Matrix checked_factor(const GaussianPrior& prior, Index n) {
  if (prior.mean.size() != n || prior.cov.rows() != n || prior.cov.cols() != n) {
    throw ModelError("prior dimensions do not match the state dimension");
  }
  if (!prior.cov.isApprox(prior.cov.transpose(), 1e-12)) throw ModelError("prior covariance is not symmetric");
  Eigen::LLT<Matrix> llt(prior.cov);
  if (llt.info() != Eigen::Success) throw ModelError("prior covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

DiffusionModel::DiffusionModel(Index state_dim, Index noise_dim, DriftFn drift, MatrixFn dispersion,
                               GaussianPrior prior, MatrixFn drift_jacobian)
    : n_(state_dim),
      m_(noise_dim),
      drift_(std::move(drift)),
      dispersion_(std::move(dispersion)),
      jacobian_(std::move(drift_jacobian)),
      prior_(std::move(prior)) {
  if (n_ < 1 || m_ < 1) throw ModelError("model dimensions must be positive");
  if (!drift_ || !dispersion_) throw ModelError("drift and dispersion are required");
  prior_factor_ = checked_factor(prior_, n_);
}

DiffusionModel DiffusionModel::with_prior(GaussianPrior prior) const {
  DiffusionModel copy = *this;
  copy.prior_factor_ = checked_factor(prior, n_);
  copy.prior_ = std::move(prior);
  return copy;
}

void DiffusionModel::drift(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  drift_(t, x, out);
}

Vector DiffusionModel::drift(double t, const Vector& x) const {
  if (x.size() != n_) throw ModelError("state dimension mismatch");
  Vector out(n_);
  drift_(t, x, out);
  return out;
}

void DiffusionModel::dispersion(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const {
  dispersion_(t, x, out);
}

Matrix DiffusionModel::dispersion(double t, const Vector& x) const {
  if (x.size() != n_) throw ModelError("state dimension mismatch");
  Matrix out(n_, m_);
  dispersion_(t, x, out);
  return out;
}

Matrix DiffusionModel::drift_jacobian(double t, const Vector& x) const {
  if (x.size() != n_) throw ModelError("state dimension mismatch");
  Matrix jac(n_, n_);
  if (jacobian_) {
    jacobian_(t, x, jac);
    return jac;
  }
  Vector xp = x;
  Vector fp(n_), fm(n_);
  for (Index i = 0; i < n_; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    drift_(t, xp, fp);
    xp(i) = x(i) - h;
    drift_(t, xp, fm);
    xp(i) = x(i);
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

void draw_noise(const StreamId& id, Index noise_dim, std::size_t steps, double dt, NoisePath& out) {
  out.id = id;
  out.increments.resize(noise_dim, static_cast<Index>(steps));
  RandomStream stream(id);
  const double scale = std::sqrt(dt);
  for (Index j = 0; j < out.increments.cols(); ++j) {
    for (Index i = 0; i < noise_dim; ++i) out.increments(i, j) = scale * stream.normal();
  }
}

NoisePath draw_noise(const StreamId& id, Index noise_dim, std::size_t steps, double dt) {
  NoisePath out;
  draw_noise(id, noise_dim, steps, dt, out);
  return out;
}

NoisePath zero_noise(Index noise_dim, std::size_t steps) {
  return NoisePath{StreamId{}, Matrix::Zero(noise_dim, static_cast<Index>(steps))};
}

Vector euler_maruyama_step(const DiffusionModel& model, double t, const Vector& x, const Vector& u,
                           const Vector& dW, double dt) {
  if (x.size() != model.state_dim() || u.size() != model.noise_dim() || dW.size() != model.noise_dim()) {
    throw ModelError("dimension mismatch in Euler-Maruyama step");
  }
  if (!(dt > 0.0)) throw UsageError("step size must be positive");
  const Vector b = model.drift(t, x);
  const Matrix sigma = model.dispersion(t, x);
  if (b.size() != x.size() || sigma.rows() != x.size()) throw ModelError("model returned wrong dimensions");
  return x + b * dt + sigma * (u * dt + dW);
}

void simulate_path(const DiffusionModel& model, const TimeGrid& grid, const ControlPolicy& policy,
                   const Eigen::Ref<const Vector>& x0, const NoisePath& noise, StatePath& out) {
  const Index n = model.state_dim();
  const Index m = model.noise_dim();
  const auto steps = static_cast<Index>(grid.steps());
  if (noise.increments.cols() != steps || noise.increments.rows() != m) {
    throw UsageError("noise path does not match the grid");
  }
  if (x0.size() != n || policy.control_dim() != m) throw ModelError("dimension mismatch in simulate_path");

  out.states.resize(n, steps + 1);
  out.controls.resize(m, steps);
  out.increments = noise.increments;
  out.states.col(0) = x0;

  Vector b(n);
  Matrix sigma(n, m);
  Vector kick(m);
  const double dt = grid.dt();
  const bool controlled = !policy.is_zero();
  if (!controlled) out.controls.setZero();
  for (Index j = 0; j < steps; ++j) {
    const double t = grid.time(static_cast<std::size_t>(j));
    const auto x = out.states.col(j);
    model.drift(t, x, b);
    model.dispersion(t, x, sigma);
    if (controlled) {
      policy.evaluate(t, x, out.controls.col(j));
      kick = out.controls.col(j) * dt + noise.increments.col(j);
    } else {
      kick = noise.increments.col(j);
    }
    out.states.col(j + 1) = x + b * dt;
    out.states.col(j + 1).noalias() += sigma * kick;
    if (!out.states.col(j + 1).allFinite()) {
      throw SimulationBlowup(static_cast<std::size_t>(j + 1), "Euler-Maruyama state diverged");
    }
  }
}

StatePath simulate_path(const DiffusionModel& model, const TimeGrid& grid, const ControlPolicy& policy,
                        const Vector& x0, const NoisePath& noise) {
  StatePath out;
  simulate_path(model, grid, policy, x0, noise, out);
  return out;
}

Matrix sample_initial(const DiffusionModel& model, std::size_t count, const StreamId& id) {
  if (count < 1) throw UsageError("need at least one initial sample");
  const Index n = model.state_dim();
  Matrix samples(n, static_cast<Index>(count));
  Vector z(n);
  for (std::size_t k = 0; k < count; ++k) {
    RandomStream stream(id.with_particle(k));
    for (Index i = 0; i < n; ++i) z(i) = stream.normal();
    samples.col(static_cast<Index>(k)) = model.prior().mean + model.prior_factor() * z;
  }
  return samples;
}

}  // namespace pipf
