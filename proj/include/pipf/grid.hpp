#pragma once

#include "pipf/core.hpp"

#include <cmath>
#include <cstddef>

namespace pipf {

/// Uniform time grid t_j = t0 + j * dt, j = 0..steps.
class TimeGrid {
 public:
  TimeGrid(double t0, double dt, std::size_t steps) : t0_(t0), dt_(dt), steps_(steps) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ModelError("time grid step must be positive");
    if (steps < 1) throw ModelError("time grid needs at least one step");
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return steps_; }
  std::size_t points() const { return steps_ + 1; }
  double time(std::size_t j) const { return t0_ + static_cast<double>(j) * dt_; }
  double end() const { return time(steps_); }

  /// Grid index of `t`; throws UsageError when `t` is not a grid point.
  std::size_t index_of(double t) const {
    const double r = (t - t0_) / dt_;
    const double j = std::round(r);
    if (j < 0.0 || j > static_cast<double>(steps_) || std::abs(r - j) > 1e-6) {
      throw UsageError("time " + std::to_string(t) + " is not on the grid");
    }
    return static_cast<std::size_t>(j);
  }

  /// Sub-grid covering [t_first, t_last] of this grid.
  TimeGrid window(std::size_t first, std::size_t last) const {
    if (last <= first || last > steps_) throw UsageError("window endpoints not on grid");
    return TimeGrid(time(first), dt_, last - first);
  }

 private:
  double t0_;
  double dt_;
  std::size_t steps_;
};

}  // namespace pipf
