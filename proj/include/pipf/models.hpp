#pragma once

#include "pipf/control.hpp"
#include "pipf/observation.hpp"
#include "pipf/random.hpp"
#include "pipf/reference.hpp"
#include "pipf/sde.hpp"

namespace pipf {

DiffusionModel linear_model(const LinearSystem& system, GaussianPrior prior);
ObservationModel linear_observation(const LinearSystem& system);

/// Scalar Ornstein-Uhlenbeck system dX = -kappa X dt + dW, dY = X dt + sigma_B dB.
LinearSystem ou_system(double kappa, double sigma_b);

/// Benes drift with X_0 ~ N(x0, prior_var); prior_var stands in for the point mass.
DiffusionModel benes_model(const BenesParams& params, double prior_var = 1e-10);
/// h(x) = h1 x + h1 h2, sigma_B = 1.
ObservationModel benes_observation(const BenesParams& params);

/// Random n-dimensional system with p = n outputs and sigma = I. A has
/// N(0, 1/n) entries shifted so that the largest eigenvalue of its symmetric
/// part is at most -0.1; C has N(0, 1/n) entries.
LinearSystem random_stable_system(Index n, double sigma_b, const StreamId& id);

}  // namespace pipf
