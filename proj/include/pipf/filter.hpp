#pragma once

#include "pipf/control.hpp"
#include "pipf/core.hpp"
#include "pipf/ensemble.hpp"
#include "pipf/grid.hpp"
#include "pipf/observation.hpp"
#include "pipf/policy.hpp"
#include "pipf/random.hpp"
#include "pipf/sde.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace pipf {

/// Everything a proposal designer may look at when building the policy for the
/// window [t_first, t_last].
struct WindowContext {
  const DiffusionModel& model;
  const ObservationModel& obs;
  const ObservationRecord& record;
  const TimeGrid& grid;
  std::size_t first;
  std::size_t last;
  const Matrix& prior_particles;
  const Vector& prior_weights;
};

using PolicyFactory = std::function<ControlPolicy(const WindowContext&)>;

PolicyFactory zero_policy_factory();
PolicyFactory lqr_policy_factory(LinearSystem system);
/// iLQR around the zero-control rollout from the prior's weighted mean.
PolicyFactory ilqr_policy_factory(IlqrOptions options = {});

struct FilterSettings {
  std::size_t particles = 500;
  std::size_t window = 20;
  double gamma_thres = 0.5;
  bool resample = true;
  ResampleScheme scheme = ResampleScheme::multinomial;
  MeasurementForm form = MeasurementForm::y_dh;
  /// Return the sampled window trajectories from pipf_window_step.
  bool keep_paths = false;
};

/// Prior ensemble {X_p, w_p} located at grid point `index`, in log-weights.
struct WindowState {
  std::size_t index = 0;
  Matrix particles;
  std::vector<double> log_weights;

  Vector weights() const { return normalize_log_weights(log_weights); }
};

/// Trajectories sampled over one window from the prior particles, with their path costs.
struct WindowSample {
  std::vector<StatePath> paths;
  std::vector<PathCost> costs;
};

struct WindowStepResult {
  FilterOutput output;
  WindowState next;
  WindowSample sample;
};

/// One sliding-window step on [t_first, t_last], first = state.index.
///
/// Samples one controlled trajectory per prior particle (stream
/// `id.with_purpose(propagate).with_window(last).with_particle(k)`), emits the
/// filtering ensemble X_last with weights w_p exp(-S(first, last)) and, when
/// `advance_prior` is set, moves the prior to first+1 with weights
/// w_p exp(-S(first, first+1)). If the filtering effective ratio drops below
/// gamma_thres the advanced prior is resampled with the filtering weights and
/// reweighted by exp(+S(first+1, last)).
WindowStepResult pipf_window_step(WindowState state, std::size_t last, const PolicyFactory& factory,
                                  const DiffusionModel& model, const ObservationModel& obs,
                                  const ObservationRecord& record, const TimeGrid& grid,
                                  const FilterSettings& settings, const StreamId& id, bool advance_prior = true);

using FilterObserver = std::function<void(const FilterOutput&)>;

/// Full filter over the grid: growing windows [0, t_j] for j <= H, sliding
/// windows [t_{j-H}, t_j] afterwards. Emits one output per grid point, starting
/// with the prior sample at t_0.
void pipf_run(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
              const TimeGrid& grid, const FilterSettings& settings, const PolicyFactory& factory,
              const StreamId& id, const FilterObserver& observer);
std::vector<FilterOutput> pipf_run(const DiffusionModel& model, const ObservationModel& obs,
                                   const ObservationRecord& record, const TimeGrid& grid,
                                   const FilterSettings& settings, const PolicyFactory& factory,
                                   const StreamId& id);

/// Proposal initial distribution: particles plus log (d nu_0 / d pi_0) at each.
struct ProposalPrior {
  Matrix particles;
  std::vector<double> log_density_ratio;
};

struct SmoothingResult {
  std::vector<StatePath> paths;
  std::vector<PathCost> costs;
  std::vector<double> log_weights;
  Vector weights;

  /// Weighted marginal at window point c.
  WeightedEnsemble marginal(std::size_t c) const;
};

/// Path-integral particle smoother on [t_first, t_last]. Without an explicit
/// proposal the initial particles are drawn from the model prior
/// (stream purpose `initial`) and d nu_0 / d pi_0 = 1.
SmoothingResult smoothing_posterior(const DiffusionModel& model, const ObservationModel& obs,
                                    const ObservationRecord& record, const TimeGrid& grid, std::size_t first,
                                    std::size_t last, std::size_t particles, const ControlPolicy& policy,
                                    const StreamId& id, const std::optional<ProposalPrior>& proposal = {},
                                    MeasurementForm form = MeasurementForm::y_dh);

}  // namespace pipf
