#pragma once

#include "pipf/core.hpp"
#include "pipf/grid.hpp"
#include "pipf/observation.hpp"
#include "pipf/policy.hpp"
#include "pipf/random.hpp"
#include "pipf/sde.hpp"

#include <vector>

namespace pipf {

ControlPolicy zero_policy(Index control_dim);

/// Quadratic value ansatz V(t_j, x) = 1/2 x'P_j x + s_j'x (+ const) on a window grid.
/// P and s vanish at the window end.
struct AffineValueFunction {
  TimeGrid window;
  std::vector<Matrix> P;
  std::vector<Vector> s;

  Vector gradient(std::size_t j, const Vector& x) const { return P[j] * x + s[j]; }
};

/// Time-varying affine-quadratic control problem on a window:
/// dynamics dx = (A_j x + c_j) dt + sigma_j (u dt + dW),
/// running cost 1/2|u|^2 + 1/2 x'Q_j x - r_j'x, no terminal cost.
/// Vectors have one entry per step (window.steps()).
struct AffineLqProblem {
  std::vector<Matrix> A;
  std::vector<Vector> c;
  std::vector<Matrix> sigma;
  std::vector<Matrix> Q;
  std::vector<Vector> r;
};

/// Backward Euler sweep of the Riccati and adjoint equations:
///   P_{j-1} = P_j + dt (A'P_j + P_j A - P_j sigma sigma' P_j + Q),
///   s_{j-1} = s_j + dt ((A - sigma sigma' P_j)'s_j + P_j c - r),
/// starting from P = 0, s = 0 at the window end. Throws DesignError on blow-up.
AffineValueFunction solve_affine_lq(const AffineLqProblem& problem, const TimeGrid& window);

/// u(t_j, x) = -sigma_j'(P_j x + s_j); the final grid point uses the last sigma.
ControlPolicy affine_policy(ControlPolicy::Kind kind, const AffineValueFunction& value,
                            const std::vector<Matrix>& sigma);

/// Linear-Gaussian system used to synthesize LQR proposals.
struct LinearSystem {
  Matrix A;
  Matrix sigma;
  Matrix C;
  double sigma_b = 1.0;
};

struct LqrDesign {
  ControlPolicy policy;
  AffineValueFunction value;
};

/// Finite-horizon LQR proposal for the window [t_first, t_last]:
/// Q = C'C / sigma_B^2, r_j = C' dY_j / (sigma_B^2 dt).
LqrDesign lqr_design(const LinearSystem& system, const ObservationRecord& record, const TimeGrid& grid,
                     std::size_t first, std::size_t last);

struct NominalTrajectory {
  Matrix states;    ///< n x (steps + 1)
  Matrix controls;  ///< m x steps
  std::vector<Matrix> jacobians;  ///< drift Jacobians A_j along the nominal
};

struct IlqrOptions {
  std::size_t iterations = 10;
  double backtrack_factor = 0.5;
  std::size_t max_halvings = 8;
};

struct IlqrDesign {
  ControlPolicy policy;
  NominalTrajectory nominal;
  AffineValueFunction value;
  /// Noise-free discretized window cost of every accepted nominal, starting with
  /// the initial rollout.
  std::vector<double> cost_history;
};

/// iLQR proposal: optimizes a noise-free nominal on the window by repeated
/// linearize / quadratize / backward pass / line-searched forward pass, then
/// returns the affine policy of the LQ problem linearized at the final nominal.
/// The initial nominal is the zero-control rollout from `x_init`.
IlqrDesign ilqr_design(const DiffusionModel& model, const ObservationModel& obs, const ObservationRecord& record,
                       const TimeGrid& grid, std::size_t first, std::size_t last, const Vector& x_init,
                       const IlqrOptions& options = {});

/// Noise-free window cost of the rollout x_{j+1} = x_j + (b + sigma u_j) dt.
double nominal_cost(const ObservationModel& obs, const ObservationRecord& record, const TimeGrid& grid,
                    std::size_t first, const Matrix& states, const Matrix& controls);

struct PathIntegralEstimate {
  Vector control;         ///< u(t, x) + weighted noise correction
  Vector correction;      ///< sum w_i dW_i / (dt sum w_j)
  Vector standard_error;  ///< delta-method standard error of the correction
  double log_weight_variance = 0.0;
  double effective_ratio = 0.0;
};

/// Importance-sampled path integral estimate of the optimal control at
/// (t_first, x) for the window ending at t_last, sampling `samples` trajectories
/// under `policy`. Sample i uses stream `id.with_particle(i)`.
PathIntegralEstimate path_integral_control_estimate(const DiffusionModel& model, const ObservationModel& obs,
                                                    const ObservationRecord& record, const TimeGrid& grid,
                                                    const ControlPolicy& policy, std::size_t first,
                                                    const Vector& x, std::size_t samples, std::size_t last,
                                                    const StreamId& id);

}  // namespace pipf
