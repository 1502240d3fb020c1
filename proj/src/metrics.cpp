#include "pipf/metrics.hpp"

#include <cmath>
#include <numbers>

namespace pipf {

Moments ensemble_moments(const WeightedEnsemble& ensemble) {
  const Matrix& x = ensemble.particles();
  const Vector& w = ensemble.weights();
  Moments out;
  out.mean = x * w;
  const Matrix centred = x.colwise() - out.mean;
  out.cov = centred * w.asDiagonal() * centred.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

double squared_error(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw UsageError("dimension mismatch in squared error");
  return (estimate - truth).squaredNorm();
}

double squared_error(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw UsageError("dimension mismatch in squared error");
  }
  return (estimate - truth).squaredNorm();
}

MetricSeries mse_series(std::span<const Moments> estimates, std::span<const Moments> oracle,
                        std::span<const double> effective_ratios, const std::vector<bool>& resampled) {
  if (estimates.size() != oracle.size()) throw UsageError("estimate and oracle series differ in length");
  if (!effective_ratios.empty() && effective_ratios.size() != estimates.size()) {
    throw UsageError("effective ratio series differs in length");
  }
  if (!resampled.empty() && resampled.size() != estimates.size()) {
    throw UsageError("resampling flags differ in length");
  }
  MetricSeries out;
  out.mse_mean.reserve(estimates.size());
  out.mse_cov.reserve(estimates.size());
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    out.mse_mean.push_back(squared_error(estimates[j].mean, oracle[j].mean));
    out.mse_cov.push_back(squared_error(estimates[j].cov, oracle[j].cov));
  }
  out.effective_ratio = effective_ratios.empty() ? std::vector<double>(estimates.size(), 1.0)
                                                 : std::vector<double>(effective_ratios.begin(), effective_ratios.end());
  out.resampled = resampled.empty() ? std::vector<bool>(estimates.size(), false) : resampled;
  return out;
}

MetricSeries mse_series(std::span<const FilterOutput> outputs, std::span<const Moments> oracle) {
  std::vector<Moments> estimates;
  std::vector<double> gammas;
  std::vector<bool> flags;
  estimates.reserve(outputs.size());
  for (const auto& o : outputs) {
    estimates.push_back(ensemble_moments(o.posterior));
    gammas.push_back(o.effective_ratio);
    flags.push_back(o.resampled);
  }
  return mse_series(estimates, oracle, gammas, flags);
}

Vector uniform_grid(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw UsageError("grid needs two or more points on a non-empty interval");
  return Vector::LinSpaced(static_cast<Index>(count), lo, hi);
}

double trapezoid(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("trapezoid needs matching grids");
  const Index n = x.size();
  const Vector dx = x.tail(n - 1) - x.head(n - 1);
  return 0.5 * dx.dot(y.tail(n - 1) + y.head(n - 1));
}

KdeEstimate kde(const WeightedEnsemble& ensemble, const Vector& grid, double bandwidth) {
  if (!(bandwidth > 0.0)) throw UsageError("bandwidth must be positive");
  if (ensemble.state_dim() != 1) throw UsageError("kde supports scalar states only");
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * bandwidth);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Vector density = Vector::Zero(grid.size());
  const auto& x = ensemble.particles();
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    const double w = ensemble.weight(k);
    if (w == 0.0) continue;
    const double centre = x(0, static_cast<Index>(k));
    density.array() += w * norm * (-(grid.array() - centre).square() * inv).exp();
  }
  return KdeEstimate{grid, std::move(density), bandwidth};
}

double l1_density_distance(const Vector& grid, const Vector& a, const Vector& b) {
  if (a.size() != grid.size() || b.size() != grid.size()) throw UsageError("densities are not on the same grid");
  return trapezoid(grid, (a - b).cwiseAbs());
}

double l1_density_distance(const KdeEstimate& a, const KdeEstimate& b) {
  if (a.grid.size() != b.grid.size() || !a.grid.isApprox(b.grid)) {
    throw UsageError("densities are not on the same grid");
  }
  return l1_density_distance(a.grid, a.density, b.density);
}

}  // namespace pipf
