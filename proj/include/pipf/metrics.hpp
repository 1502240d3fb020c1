#pragma once

#include "pipf/core.hpp"
#include "pipf/ensemble.hpp"

#include <span>
#include <vector>

namespace pipf {

struct Moments {
  Vector mean;
  Matrix cov;
};

/// Weighted mean and (biased) weighted covariance.
Moments ensemble_moments(const WeightedEnsemble& ensemble);

struct MetricSeries {
  std::vector<double> mse_mean;
  std::vector<double> mse_cov;
  std::vector<double> effective_ratio;
  std::vector<bool> resampled;

  std::size_t size() const { return mse_mean.size(); }
};

/// Squared Euclidean error of the mean and squared Frobenius error of the covariance.
double squared_error(const Vector& estimate, const Vector& truth);
double squared_error(const Matrix& estimate, const Matrix& truth);

MetricSeries mse_series(std::span<const Moments> estimates, std::span<const Moments> oracle,
                        std::span<const double> effective_ratios = {}, const std::vector<bool>& resampled = {});
MetricSeries mse_series(std::span<const FilterOutput> outputs, std::span<const Moments> oracle);

/// Evenly spaced grid with `count` points on [lo, hi].
Vector uniform_grid(double lo, double hi, std::size_t count);
double trapezoid(const Vector& x, const Vector& y);

struct KdeEstimate {
  Vector grid;
  Vector density;
  double bandwidth = 0.0;
};

/// Weighted Gaussian-kernel density sum_k w_k N(x; X_k, bandwidth^2) for a scalar ensemble.
KdeEstimate kde(const WeightedEnsemble& ensemble, const Vector& grid, double bandwidth);

/// Trapezoid integral of |a - b| on a shared grid.
double l1_density_distance(const Vector& grid, const Vector& a, const Vector& b);
double l1_density_distance(const KdeEstimate& a, const KdeEstimate& b);

}  // namespace pipf
