#pragma once

#include "pipf/core.hpp"
#include "pipf/random.hpp"

#include <span>
#include <vector>

namespace pipf {

/// Log-sum-exp with a fixed pairwise reduction tree, so the result does not
/// depend on how the inputs were produced. Returns -inf when every entry is -inf.
double log_sum_exp(std::span<const double> values);

/// Normalized weights from log-weights. Throws DegenerateWeights when no entry
/// carries finite mass.
Vector normalize_log_weights(std::span<const double> log_weights);

/// gamma = 1 / (K sum w_k^2) for weights that sum to one.
double effective_ratio(const Vector& weights);

/// Particles (one column each) with normalized weights.
class WeightedEnsemble {
 public:
  WeightedEnsemble(Matrix particles, Vector weights);
  static WeightedEnsemble uniform(Matrix particles);
  static WeightedEnsemble from_log_weights(Matrix particles, std::span<const double> log_weights);

  std::size_t size() const { return static_cast<std::size_t>(particles_.cols()); }
  Index state_dim() const { return particles_.rows(); }
  const Matrix& particles() const { return particles_; }
  const Vector& weights() const { return weights_; }
  auto particle(std::size_t k) const { return particles_.col(static_cast<Index>(k)); }
  double weight(std::size_t k) const { return weights_(static_cast<Index>(k)); }

  double effective_ratio() const { return pipf::effective_ratio(weights_); }
  Vector mean() const { return particles_ * weights_; }

 private:
  Matrix particles_;
  Vector weights_;
};

enum class ResampleScheme { multinomial, systematic };

/// K ancestor indices drawn i.i.d. from the discrete distribution proportional
/// to `weights` (need not be normalized). Throws DegenerateWeights when the
/// weights have no positive finite mass.
std::vector<std::size_t> multinomial_indices(const Vector& weights, std::size_t count, const StreamId& id);
/// Systematic (single uniform offset) alternative.
std::vector<std::size_t> systematic_indices(const Vector& weights, std::size_t count, const StreamId& id);
std::vector<std::size_t> resample_indices(ResampleScheme scheme, const Vector& weights, std::size_t count,
                                          const StreamId& id);

/// K particles drawn from the ensemble's particles with probabilities proportional
/// to `resample_weights`.
Matrix multinomial_resample(const WeightedEnsemble& ensemble, const Vector& resample_weights,
                            const StreamId& id);

Matrix gather_columns(const Matrix& source, const std::vector<std::size_t>& indices);

}  // namespace pipf

namespace pipf {

/// Posterior representation emitted by a filter at one grid point.
struct FilterOutput {
  std::size_t step = 0;
  double time = 0.0;
  WeightedEnsemble posterior;
  double effective_ratio = 1.0;
  bool resampled = false;
};

}  // namespace pipf
