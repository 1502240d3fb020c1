#pragma once

#include "pipf/core.hpp"
#include "pipf/grid.hpp"
#include "pipf/policy.hpp"
#include "pipf/random.hpp"

#include <functional>

namespace pipf {

struct GaussianPrior {
  Vector mean;
  Matrix cov;
};

/// Controlled diffusion dX = b(t, X) dt + sigma(t, X) (u dt + dW), X_0 ~ N(m0, P0).
class DiffusionModel {
 public:
  using DriftFn = std::function<void(double, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>;
  /// Writes sigma(t, x) (n x m), or the drift Jacobian (n x n), into the output.
  using MatrixFn = std::function<void(double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix>)>;

  DiffusionModel(Index state_dim, Index noise_dim, DriftFn drift, MatrixFn dispersion,
                 GaussianPrior prior, MatrixFn drift_jacobian = {});

  Index state_dim() const { return n_; }
  Index noise_dim() const { return m_; }
  const GaussianPrior& prior() const { return prior_; }
  /// Lower Cholesky factor of the prior covariance.
  const Matrix& prior_factor() const { return prior_factor_; }

  DiffusionModel with_prior(GaussianPrior prior) const;

  void drift(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;
  Vector drift(double t, const Vector& x) const;
  void dispersion(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) const;
  Matrix dispersion(double t, const Vector& x) const;
  /// Analytic Jacobian when supplied, central differences otherwise.
  Matrix drift_jacobian(double t, const Vector& x) const;

 private:
  Index n_;
  Index m_;
  DriftFn drift_;
  MatrixFn dispersion_;
  MatrixFn jacobian_;
  GaussianPrior prior_;
  Matrix prior_factor_;
};

/// Brownian increments dW_j ~ N(0, dt I) for one stream, one column per step.
struct NoisePath {
  StreamId id;
  Matrix increments;

  std::size_t steps() const { return static_cast<std::size_t>(increments.cols()); }
};

/// Sampled trajectory: states has steps+1 columns, controls and increments have steps.
struct StatePath {
  Matrix states;
  Matrix controls;
  Matrix increments;

  std::size_t steps() const { return static_cast<std::size_t>(controls.cols()); }
};

NoisePath draw_noise(const StreamId& id, Index noise_dim, std::size_t steps, double dt);
void draw_noise(const StreamId& id, Index noise_dim, std::size_t steps, double dt, NoisePath& out);
NoisePath zero_noise(Index noise_dim, std::size_t steps);

/// x + b(t,x) dt + sigma(t,x) (u dt + dW).
Vector euler_maruyama_step(const DiffusionModel& model, double t, const Vector& x, const Vector& u,
                           const Vector& dW, double dt);

/// Euler-Maruyama rollout over `grid` starting at x0, recording u_j = policy(t_j, X_j).
/// Throws SimulationBlowup with the failing step index on non-finite states.
StatePath simulate_path(const DiffusionModel& model, const TimeGrid& grid, const ControlPolicy& policy,
                        const Vector& x0, const NoisePath& noise);
/// Same, reusing the storage of `out`.
void simulate_path(const DiffusionModel& model, const TimeGrid& grid, const ControlPolicy& policy,
                   const Eigen::Ref<const Vector>& x0, const NoisePath& noise, StatePath& out);

/// K i.i.d. draws from the model prior, one column each. Particle k uses the
/// stream `id.with_particle(k)`.
Matrix sample_initial(const DiffusionModel& model, std::size_t count, const StreamId& id);

}  // namespace pipf
