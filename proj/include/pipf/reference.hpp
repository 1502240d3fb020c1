#pragma once

#include "pipf/control.hpp"
#include "pipf/core.hpp"
#include "pipf/ensemble.hpp"
#include "pipf/filter.hpp"
#include "pipf/grid.hpp"
#include "pipf/observation.hpp"
#include "pipf/random.hpp"
#include "pipf/sde.hpp"

#include <vector>

namespace pipf {

// ---------------------------------------------------------------------------
// SIR baseline

/// Per-step observation log-likelihood used by SIR, up to an x-independent constant.
enum class SirLikelihood {
  /// -(1/sigma_B^2) (1/2 |h(x_j)|^2 dt - h(x_{j+1}).dY_j): the Euler-discretized
  /// Kallianpur-Striebel increment, identical to the zero-control path cost.
  path_consistent,
  /// log N(dY_j; h(x_{j+1}) dt, sigma_B^2 dt I).
  gaussian_endpoint,
};

struct SirSettings {
  std::size_t particles = 500;
  double gamma_thres = 0.5;
  bool resample = true;
  ResampleScheme scheme = ResampleScheme::multinomial;
  SirLikelihood likelihood = SirLikelihood::path_consistent;
};

/// Particles with unnormalized log-weights at grid point `index`.
struct SirState {
  std::size_t index = 0;
  Matrix particles;
  std::vector<double> log_weights;
};

double sir_log_likelihood(const ObservationModel& obs, SirLikelihood kind, double t, const Vector& x,
                          const Vector& x_next, const Eigen::Ref<const Vector>& dy, double dt);

/// Propagates every particle one uncontrolled Euler step (stream
/// `id.with_purpose(propagate).with_window(index + 1).with_particle(k)`), multiplies
/// the weights by the increment likelihood, normalizes, and resamples
/// (multinomial) when the effective ratio drops below gamma_thres.
FilterOutput sir_step(SirState& state, const DiffusionModel& model, const ObservationModel& obs,
                      const ObservationRecord& record, const TimeGrid& grid, const SirSettings& settings,
                      const StreamId& id);

void sir_run(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
             const TimeGrid& grid, const SirSettings& settings, const StreamId& id, const FilterObserver& observer);
std::vector<FilterOutput> sir_run(const DiffusionModel& model, const ObservationModel& obs,
                                  const ObservationRecord& record, const TimeGrid& grid,
                                  const SirSettings& settings, const StreamId& id);

// ---------------------------------------------------------------------------
// Kalman-Bucy

struct KalmanBucyState {
  Vector mean;
  Matrix cov;
};

/// Euler step of the Kalman-Bucy filter for dX = AX dt + sigma dW, dY = CX dt + sigma_B dB:
///   m += A m dt + (P C'/sigma_B^2)(dY - C m dt),
///   P += (A P + P A' - P C'C P / sigma_B^2 + sigma sigma') dt.
/// Throws OracleFailure if P stops being positive definite.
KalmanBucyState kalman_bucy_step(const KalmanBucyState& state, const LinearSystem& system,
                                 const Eigen::Ref<const Vector>& dy, double dt);

std::vector<KalmanBucyState> kalman_bucy_run(const LinearSystem& system, const GaussianPrior& prior,
                                             const ObservationRecord& record, const TimeGrid& grid);

// ---------------------------------------------------------------------------
// Benes filter

/// dX = mu sigma_W tanh(mu X / sigma_W) dt + sigma_W dW, X_0 = x0;
/// dY = (h1 X + h1 h2) dt + dB.
struct BenesParams {
  double mu = 1.0;
  double sigma_w = 1.0;
  double h1 = 1.0;
  double h2 = 0.0;
  double x0 = -5.0;
};

/// omega N(a - b, var) + (1 - omega) N(a + b, var).
struct BenesPosterior {
  double omega = 0.5;
  double a = 0.0;
  double b = 0.0;
  double var = 1.0;

  double mean() const { return a + b * (1.0 - 2.0 * omega); }
  double variance() const { return var + 4.0 * b * b * omega * (1.0 - omega); }
  /// Both modes separated by more than four standard deviations.
  bool bimodal() const { return 2.0 * std::abs(b) > 4.0 * std::sqrt(var); }
};

/// Closed-form posterior at grid point j > 0. The stochastic integral
/// Psi_t = int_0^t sinh(h1 sigma_W s) / sinh(h1 sigma_W t) dY_s uses left-point sums.
BenesPosterior benes_posterior(const BenesParams& params, const ObservationRecord& record, const TimeGrid& grid,
                               std::size_t j);

/// benes_posterior at every grid point in one pass over the record; entry 0 is
/// the point mass at x0 represented with var = 0.
std::vector<BenesPosterior> benes_posterior_series(const BenesParams& params, const ObservationRecord& record,
                                                   const TimeGrid& grid);

Vector benes_density(const BenesPosterior& post, const Vector& x);

}  // namespace pipf
