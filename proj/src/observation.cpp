#include "pipf/observation.hpp"

#include <cmath>

namespace pipf {

ObservationModel::ObservationModel(Index obs_dim, SensorFn sensor, double sigma_b, JacobianFn jacobian)
    : p_(obs_dim), h_(std::move(sensor)), sigma_b_(sigma_b), jacobian_(std::move(jacobian)) {
  if (p_ < 1) throw ModelError("observation dimension must be positive");
  if (!h_) throw ModelError("sensor function is required");
  if (!(sigma_b > 0.0) || !std::isfinite(sigma_b)) throw ModelError("sigma_B must be positive");
}

Vector ObservationModel::sensor(double t, const Vector& x) const {
  Vector out(p_);
  h_(t, x, out);
  return out;
}

Matrix ObservationModel::jacobian(double t, const Vector& x) const {
  Matrix jac(p_, x.size());
  if (jacobian_) {
    jacobian_(t, x, jac);
    return jac;
  }
  Vector xp = x;
  Vector hp(p_), hm(p_);
  for (Index i = 0; i < x.size(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    h_(t, xp, hp);
    xp(i) = x(i) - step;
    h_(t, xp, hm);
    xp(i) = x(i);
    jac.col(i) = (hp - hm) / (2.0 * step);
  }
  return jac;
}

ObservationRecord::ObservationRecord(Matrix cumulative) : cumulative_(std::move(cumulative)) {
  if (cumulative_.cols() < 2) throw UsageError("observation record needs at least one increment");
  if (!cumulative_.col(0).isZero(0.0)) throw UsageError("observation record must start at Y_0 = 0");
  const Index steps = cumulative_.cols() - 1;
  increments_ = cumulative_.rightCols(steps) - cumulative_.leftCols(steps);
}

ObservationRecord generate_observations(const ObservationModel& obs, const TimeGrid& grid,
                                        const StatePath& truth, const StreamId& id) {
  const auto steps = static_cast<Index>(grid.steps());
  if (truth.states.cols() != steps + 1) throw UsageError("truth path is not defined on the grid");
  const Index p = obs.obs_dim();
  Matrix y = Matrix::Zero(p, steps + 1);
  Vector h(p);
  RandomStream stream(id);
  const double scale = obs.sigma_b() * std::sqrt(grid.dt());
  for (Index j = 0; j < steps; ++j) {
    obs.sensor(grid.time(static_cast<std::size_t>(j)), truth.states.col(j), h);
    y.col(j + 1) = y.col(j) + h * grid.dt();
    for (Index i = 0; i < p; ++i) y(i, j + 1) += scale * stream.normal();
  }
  return ObservationRecord(std::move(y));
}

double running_cost_increment(const ObservationModel& obs, const Vector& y, double t, const Vector& x,
                              const Vector& x_next, double dt) {
  if (!(dt > 0.0)) throw UsageError("step size must be positive");
  const Vector h = obs.sensor(t, x);
  const Vector h_next = obs.sensor(t + dt, x_next);
  return obs.inv_var() * (0.5 * h.squaredNorm() * dt + y.dot(h_next - h));
}

double terminal_cost(const ObservationModel& obs, const Vector& y_end, double t_end, const Vector& x) {
  return -obs.inv_var() * y_end.dot(obs.sensor(t_end, x));
}

PathCost window_cost(const StatePath& path, const ObservationModel& obs, const ObservationRecord& record,
                     const TimeGrid& grid, std::size_t first, std::size_t last, MeasurementForm form) {
  if (last <= first || last > grid.steps() || last > record.steps()) {
    throw UsageError("window endpoints not on grid");
  }
  const auto steps = static_cast<Index>(last - first);
  if (path.states.cols() != steps + 1 || path.controls.cols() != steps) {
    throw UsageError("path does not cover the window");
  }
  const Index p = obs.obs_dim();
  const double dt = grid.dt();
  const double inv_var = obs.inv_var();

  Matrix h(p, steps + 1);
  for (Index c = 0; c <= steps; ++c) {
    obs.sensor(grid.time(first + static_cast<std::size_t>(c)), path.states.col(c), h.col(c));
  }

  PathCost cost;
  cost.partial.resize(steps + 1);
  cost.partial(0) = 0.0;
  const auto y0 = record.value(first);
  double running = 0.0;
  for (Index c = 0; c < steps; ++c) {
    const auto u = path.controls.col(c);
    running += 0.5 * inv_var * h.col(c).squaredNorm() * dt + 0.5 * u.squaredNorm() * dt +
               u.dot(path.increments.col(c));
    const std::size_t j = first + static_cast<std::size_t>(c);
    if (form == MeasurementForm::y_dh) {
      running += inv_var * (record.value(j) - y0).dot(h.col(c + 1) - h.col(c));
      cost.partial(c + 1) = running - inv_var * (record.value(j + 1) - y0).dot(h.col(c + 1));
    } else {
      running -= inv_var * h.col(c + 1).dot(record.increment(j));
      cost.partial(c + 1) = running;
    }
  }
  return cost;
}

}  // namespace pipf
