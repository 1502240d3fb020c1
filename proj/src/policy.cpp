#include "pipf/policy.hpp"

namespace pipf {

ControlPolicy ControlPolicy::zero(Index control_dim) {
  if (control_dim < 1) throw ModelError("control dimension must be positive");
  return ControlPolicy(Kind::zero, control_dim);
}

ControlPolicy ControlPolicy::affine(Kind kind, const TimeGrid& window, std::vector<Matrix> gains,
                                    std::vector<Vector> feedforward) {
  if (kind == Kind::zero) throw UsageError("affine policy cannot carry the zero tag");
  if (gains.size() != window.points() || feedforward.size() != window.points()) {
    throw UsageError("affine policy tables must have one entry per window grid point");
  }
  const Index m = feedforward.front().size();
  for (std::size_t j = 0; j < gains.size(); ++j) {
    if (gains[j].rows() != m || feedforward[j].size() != m || gains[j].cols() != gains[0].cols()) {
      throw UsageError("inconsistent affine policy dimensions");
    }
  }
  ControlPolicy policy(kind, m);
  policy.window_ = window;
  policy.gains_ = std::move(gains);
  policy.feedforward_ = std::move(feedforward);
  return policy;
}

Vector ControlPolicy::evaluate(double t, const Vector& x) const {
  Vector u(control_dim_);
  evaluate(t, x, u);
  return u;
}

void ControlPolicy::evaluate(double t, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> u) const {
  if (kind_ == Kind::zero) {
    u.setZero();
    return;
  }
  const std::size_t j = window_->index_of(t);
  u.noalias() = gains_[j] * x;
  u += feedforward_[j];
}

std::string_view to_string(ControlPolicy::Kind kind) {
  switch (kind) {
    case ControlPolicy::Kind::zero:
      return "zero";
    case ControlPolicy::Kind::lqr:
      return "lqr";
    case ControlPolicy::Kind::ilqr:
      return "ilqr";
  }
  return "unknown";
}

}  // namespace pipf
