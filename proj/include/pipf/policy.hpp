#pragma once

#include "pipf/core.hpp"
#include "pipf/grid.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace pipf {

/// State-feedback proposal control u(t, x).
///
/// Policies are either identically zero or time-varying affine laws
/// u = feedforward_j + gain_j * x tabulated on the points of a window grid.
/// Instances are immutable and safe to share across threads.
class ControlPolicy {
 public:
  enum class Kind { zero, lqr, ilqr };

  static ControlPolicy zero(Index control_dim);
  static ControlPolicy affine(Kind kind, const TimeGrid& window, std::vector<Matrix> gains,
                              std::vector<Vector> feedforward);

  Kind kind() const { return kind_; }
  Index control_dim() const { return control_dim_; }
  bool is_zero() const { return kind_ == Kind::zero; }

  Vector evaluate(double t, const Vector& x) const;
  void evaluate(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> u) const;

  /// Affine tables; empty for the zero policy.
  const std::vector<Matrix>& gains() const { return gains_; }
  const std::vector<Vector>& feedforward() const { return feedforward_; }
  const std::optional<TimeGrid>& window() const { return window_; }

 private:
  ControlPolicy(Kind kind, Index control_dim) : kind_(kind), control_dim_(control_dim) {}

  Kind kind_;
  Index control_dim_;
  std::optional<TimeGrid> window_;
  std::vector<Matrix> gains_;
  std::vector<Vector> feedforward_;
};

std::string_view to_string(ControlPolicy::Kind kind);

}  // namespace pipf
