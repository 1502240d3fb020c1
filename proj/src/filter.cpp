#include "pipf/filter.hpp"

#include <cmath>

namespace pipf {

PolicyFactory zero_policy_factory() {
  return [](const WindowContext& ctx) { return ControlPolicy::zero(ctx.model.noise_dim()); };
}

PolicyFactory lqr_policy_factory(LinearSystem system) {
  return [system = std::move(system)](const WindowContext& ctx) {
    return lqr_design(system, ctx.record, ctx.grid, ctx.first, ctx.last).policy;
  };
}

PolicyFactory ilqr_policy_factory(IlqrOptions options) {
  return [options](const WindowContext& ctx) {
    const Vector mean = ctx.prior_particles * ctx.prior_weights;
    return ilqr_design(ctx.model, ctx.obs, ctx.record, ctx.grid, ctx.first, ctx.last, mean, options).policy;
  };
}

namespace {

struct WindowEndpoints {
  Matrix next;   // X at first + 1
  Matrix final;  // X at last
  std::vector<double> total;
  std::vector<double> head;  // S(first, first + 1)
};

WindowEndpoints sample_window(const DiffusionModel& model, const ObservationModel& obs,
                              const ObservationRecord& record, const TimeGrid& grid, std::size_t first,
                              std::size_t last, const ControlPolicy& policy, const Matrix& starts,
                              const StreamId& id, MeasurementForm form, WindowSample* keep) {
  const TimeGrid window = grid.window(first, last);
  const auto count = static_cast<std::size_t>(starts.cols());
  const StreamId noise_id = id.with_purpose(StreamPurpose::propagate).with_window(last);

  WindowEndpoints out{Matrix(model.state_dim(), starts.cols()), Matrix(model.state_dim(), starts.cols()),
                      std::vector<double>(count), std::vector<double>(count)};
  if (keep) {
    keep->paths.resize(count);
    keep->costs.resize(count);
  }
  NoisePath noise;
  StatePath scratch;
  for (std::size_t k = 0; k < count; ++k) {
    const auto col = static_cast<Index>(k);
    draw_noise(noise_id.with_particle(k), model.noise_dim(), window.steps(), grid.dt(), noise);
    StatePath& path = keep ? keep->paths[k] : scratch;
    simulate_path(model, window, policy, starts.col(col), noise, path);
    PathCost cost = window_cost(path, obs, record, grid, first, last, form);
    out.next.col(col) = path.states.col(1);
    out.final.col(col) = path.states.col(path.states.cols() - 1);
    out.total[k] = cost.total();
    out.head[k] = cost.partial(1);
    if (keep) keep->costs[k] = std::move(cost);
  }
  return out;
}

}  // namespace

WindowStepResult pipf_window_step(WindowState state, std::size_t last, const PolicyFactory& factory,
                                  const DiffusionModel& model, const ObservationModel& obs,
                                  const ObservationRecord& record, const TimeGrid& grid,
                                  const FilterSettings& settings, const StreamId& id, bool advance_prior) {
  const std::size_t first = state.index;
  const auto count = static_cast<std::size_t>(state.particles.cols());
  if (count < 1 || state.log_weights.size() != count) throw UsageError("prior ensemble is not populated");
  if (last <= first || last > grid.steps()) throw UsageError("window endpoints not on grid");

  const Vector prior_weights = state.weights();
  const WindowContext ctx{model, obs, record, grid, first, last, state.particles, prior_weights};
  const ControlPolicy policy = factory(ctx);

  WindowSample sample;
  const WindowEndpoints ends = sample_window(model, obs, record, grid, first, last, policy, state.particles, id,
                                             settings.form, settings.keep_paths ? &sample : nullptr);

  std::vector<double> filtering(count);
  for (std::size_t k = 0; k < count; ++k) filtering[k] = state.log_weights[k] - ends.total[k];
  const Vector filtering_weights = normalize_log_weights(filtering);
  const double gamma = effective_ratio(filtering_weights);
  WindowStepResult result{
      FilterOutput{last, grid.time(last), WeightedEnsemble(ends.final, filtering_weights / filtering_weights.sum()),
                   gamma, false},
      WindowState{}, std::move(sample)};

  if (!advance_prior) {
    result.next = std::move(state);
    return result;
  }

  WindowState& next = result.next;
  next.index = first + 1;
  if (settings.resample && gamma < settings.gamma_thres) {
    const StreamId resample_id = id.with_purpose(StreamPurpose::resample).with_window(last);
    const auto ancestors = resample_indices(settings.scheme, filtering_weights, count, resample_id);
    next.particles = gather_columns(ends.next, ancestors);
    next.log_weights.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t a = ancestors[k];
      next.log_weights[k] = ends.total[a] - ends.head[a];  // +S(first + 1, last)
    }
    result.output.resampled = true;
  } else {
    next.particles = ends.next;
    next.log_weights.resize(count);
    for (std::size_t k = 0; k < count; ++k) next.log_weights[k] = state.log_weights[k] - ends.head[k];
  }
  return result;
}

void pipf_run(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
              const TimeGrid& grid, const FilterSettings& settings, const PolicyFactory& factory,
              const StreamId& id, const FilterObserver& observer) {
  if (settings.particles < 1 || settings.window < 1) throw UsageError("K and H must be at least 1");
  if (record.steps() < grid.steps()) throw UsageError("observation record shorter than the grid");

  WindowState state;
  state.index = 0;
  state.particles = sample_initial(model, settings.particles, id.with_purpose(StreamPurpose::initial));
  state.log_weights.assign(settings.particles, 0.0);
  observer(FilterOutput{0, grid.time(0), WeightedEnsemble::uniform(state.particles), 1.0, false});

  for (std::size_t j = 1; j <= grid.steps(); ++j) {
    const bool startup = j < settings.window;
    WindowStepResult step =
        pipf_window_step(std::move(state), j, factory, model, obs, record, grid, settings, id, !startup);
    observer(step.output);
    state = std::move(step.next);
  }
}

std::vector<FilterOutput> pipf_run(const DiffusionModel& model, const ObservationModel& obs,
                                   const ObservationRecord& record, const TimeGrid& grid,
                                   const FilterSettings& settings, const PolicyFactory& factory,
                                   const StreamId& id) {
  std::vector<FilterOutput> outputs;
  outputs.reserve(grid.points());
  pipf_run(model, obs, record, grid, settings, factory, id,
           [&outputs](const FilterOutput& out) { outputs.push_back(out); });
  return outputs;
}

WeightedEnsemble SmoothingResult::marginal(std::size_t c) const {
  if (paths.empty()) throw UsageError("empty smoothing result");
  Matrix states(paths.front().states.rows(), static_cast<Index>(paths.size()));
  for (std::size_t k = 0; k < paths.size(); ++k) {
    states.col(static_cast<Index>(k)) = paths[k].states.col(static_cast<Index>(c));
  }
  return WeightedEnsemble(std::move(states), weights);
}

SmoothingResult smoothing_posterior(const DiffusionModel& model, const ObservationModel& obs,
                                    const ObservationRecord& record, const TimeGrid& grid, std::size_t first,
                                    std::size_t last, std::size_t particles, const ControlPolicy& policy,
                                    const StreamId& id, const std::optional<ProposalPrior>& proposal,
                                    MeasurementForm form) {
  Matrix starts;
  std::vector<double> log_ratio;
  if (proposal) {
    starts = proposal->particles;
    log_ratio = proposal->log_density_ratio;
    if (log_ratio.size() != static_cast<std::size_t>(starts.cols())) {
      throw UsageError("one density ratio per proposal particle required");
    }
  } else {
    if (particles < 1) throw UsageError("need at least one particle");
    starts = sample_initial(model, particles, id.with_purpose(StreamPurpose::initial));
    log_ratio.assign(particles, 0.0);
  }

  SmoothingResult result;
  WindowSample sample;
  const WindowEndpoints ends = sample_window(model, obs, record, grid, first, last, policy, starts, id, form, &sample);
  result.paths = std::move(sample.paths);
  result.costs = std::move(sample.costs);
  result.log_weights.resize(log_ratio.size());
  for (std::size_t k = 0; k < log_ratio.size(); ++k) result.log_weights[k] = log_ratio[k] - ends.total[k];
  result.weights = normalize_log_weights(result.log_weights);
  result.weights /= result.weights.sum();
  return result;
}

}  // namespace pipf
