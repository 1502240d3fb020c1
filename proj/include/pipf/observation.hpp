#pragma once

#include "pipf/core.hpp"
#include "pipf/grid.hpp"
#include "pipf/random.hpp"
#include "pipf/sde.hpp"

#include <functional>

namespace pipf {

/// dY = h(t, X) dt + sigma_B dB, Y_0 = 0.
class ObservationModel {
 public:
  using SensorFn = std::function<void(double, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector>)>;
  using JacobianFn = std::function<void(double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix>)>;

  ObservationModel(Index obs_dim, SensorFn sensor, double sigma_b, JacobianFn jacobian = {});

  Index obs_dim() const { return p_; }
  double sigma_b() const { return sigma_b_; }
  double inv_var() const { return 1.0 / (sigma_b_ * sigma_b_); }

  void sensor(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const { h_(t, x, out); }
  Vector sensor(double t, const Vector& x) const;
  /// Analytic Jacobian (p x n) when supplied, central differences otherwise.
  Matrix jacobian(double t, const Vector& x) const;

 private:
  Index p_;
  SensorFn h_;
  double sigma_b_;
  JacobianFn jacobian_;
};

/// Cumulative measurement Y_j on every grid point with Y_0 = 0.
class ObservationRecord {
 public:
  explicit ObservationRecord(Matrix cumulative);

  Index obs_dim() const { return cumulative_.rows(); }
  std::size_t steps() const { return static_cast<std::size_t>(increments_.cols()); }
  const Matrix& cumulative() const { return cumulative_; }
  const Matrix& increments() const { return increments_; }
  auto value(std::size_t j) const { return cumulative_.col(static_cast<Index>(j)); }
  /// Y_{j+1} - Y_j.
  auto increment(std::size_t j) const { return increments_.col(static_cast<Index>(j)); }

  ObservationRecord scaled(double factor) const { return ObservationRecord(cumulative_ * factor); }

 private:
  Matrix cumulative_;
  Matrix increments_;
};

/// Delta Y_j = h(t_j, X_j) dt + sigma_B dB_j, dB_j ~ N(0, dt I), accumulated from Y_0 = 0.
ObservationRecord generate_observations(const ObservationModel& obs, const TimeGrid& grid,
                                        const StatePath& truth, const StreamId& id);

/// (1/2 sigma_B^2) |h(t_j, x_j)|^2 dt + (1/sigma_B^2) Y_j . (h(t_j + dt, x_next) - h(t_j, x_j)).
double running_cost_increment(const ObservationModel& obs, const Vector& y, double t, const Vector& x,
                              const Vector& x_next, double dt);

/// -(1/sigma_B^2) Y_end . h(t_end, x).
double terminal_cost(const ObservationModel& obs, const Vector& y_end, double t_end, const Vector& x);

/// How the measurement part of the path cost is discretized. Both are exactly
/// equal after summation by parts; y_dh is the default.
enum class MeasurementForm {
  y_dh,  ///< sum Y_j dh_j - Y_b h_b
  h_dy,  ///< -sum h_{j+1} dY_j
};

/// Path cost S^u over a window [t_a, t_b] and its partial sums.
struct PathCost {
  /// partial(c) = S(t_a, t_{a+c}), each including its own terminal term; partial(0) = 0.
  Vector partial;

  double total() const { return partial(partial.size() - 1); }
  /// S(t_{a+from}, t_{a+to}) by additivity of the window-referenced cost.
  double between(Index from, Index to) const { return partial(to) - partial(from); }
};

/// Path cost of `path` over grid points [first, last].
///
/// The observation record is referenced to the window start (Y_j - Y_first), so the
/// cost is the negative log-likelihood of the window's measurements given the path
/// plus the Girsanov terms 1/2|u|^2 dt + u.dW of the proposal control.
PathCost window_cost(const StatePath& path, const ObservationModel& obs, const ObservationRecord& record,
                     const TimeGrid& grid, std::size_t first, std::size_t last,
                     MeasurementForm form = MeasurementForm::y_dh);

}  // namespace pipf
