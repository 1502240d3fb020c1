#include "pipf/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pipf {

namespace {

double pairwise_sum(std::span<const double> values, double shift) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += std::exp(v - shift);
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half), shift) + pairwise_sum(values.subspan(half), shift);
}

void check_weights(const Vector& weights) {
  if (weights.size() == 0) throw DegenerateWeights("empty weight vector");
  for (Index k = 0; k < weights.size(); ++k) {
    if (!(weights(k) >= 0.0) || !std::isfinite(weights(k))) {
      throw DegenerateWeights("weights must be finite and non-negative");
    }
  }
  if (!(weights.sum() > 0.0)) throw DegenerateWeights("weights have no positive mass");
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) return v;
    top = std::max(top, v);
  }
  if (!std::isfinite(top)) return top;
  return top + std::log(pairwise_sum(values, top));
}

Vector normalize_log_weights(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw DegenerateWeights("all log-weights are -inf or NaN");
  Vector w(static_cast<Index>(log_weights.size()));
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    w(static_cast<Index>(k)) = std::exp(log_weights[k] - lse);
  }
  return w;
}

double effective_ratio(const Vector& weights) {
  check_weights(weights);
  const Vector w = weights / weights.sum();
  return 1.0 / (static_cast<double>(w.size()) * w.squaredNorm());
}

WeightedEnsemble::WeightedEnsemble(Matrix particles, Vector weights)
    : particles_(std::move(particles)), weights_(std::move(weights)) {
  if (particles_.cols() < 1) throw UsageError("ensemble needs at least one particle");
  if (weights_.size() != particles_.cols()) throw UsageError("one weight per particle required");
  check_weights(weights_);
  if (std::abs(weights_.sum() - 1.0) > 1e-12) throw UsageError("ensemble weights must be normalized");
}

WeightedEnsemble WeightedEnsemble::uniform(Matrix particles) {
  const Index k = particles.cols();
  return WeightedEnsemble(std::move(particles), Vector::Constant(k, 1.0 / static_cast<double>(k)));
}

WeightedEnsemble WeightedEnsemble::from_log_weights(Matrix particles, std::span<const double> log_weights) {
  Vector w = normalize_log_weights(log_weights);
  w /= w.sum();
  return WeightedEnsemble(std::move(particles), std::move(w));
}

std::vector<std::size_t> multinomial_indices(const Vector& weights, std::size_t count, const StreamId& id) {
  check_weights(weights);
  RandomStream stream(id);
  std::discrete_distribution<std::size_t> pick(weights.data(), weights.data() + weights.size());
  std::vector<std::size_t> out(count);
  for (auto& index : out) index = pick(stream.engine());
  return out;
}

std::vector<std::size_t> systematic_indices(const Vector& weights, std::size_t count, const StreamId& id) {
  check_weights(weights);
  RandomStream stream(id);
  const double total = weights.sum();
  const double step = total / static_cast<double>(count);
  double position = stream.uniform() * step;
  std::vector<std::size_t> out(count);
  double cumulative = weights(0);
  std::size_t source = 0;
  const auto last = static_cast<std::size_t>(weights.size() - 1);
  for (auto& index : out) {
    while (position > cumulative && source < last) cumulative += weights(static_cast<Index>(++source));
    index = source;
    position += step;
  }
  return out;
}

std::vector<std::size_t> resample_indices(ResampleScheme scheme, const Vector& weights, std::size_t count,
                                          const StreamId& id) {
  return scheme == ResampleScheme::multinomial ? multinomial_indices(weights, count, id)
                                               : systematic_indices(weights, count, id);
}

Matrix gather_columns(const Matrix& source, const std::vector<std::size_t>& indices) {
  Matrix out(source.rows(), static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    out.col(static_cast<Index>(k)) = source.col(static_cast<Index>(indices[k]));
  }
  return out;
}

Matrix multinomial_resample(const WeightedEnsemble& ensemble, const Vector& resample_weights,
                            const StreamId& id) {
  if (static_cast<std::size_t>(resample_weights.size()) != ensemble.size()) {
    throw UsageError("one resampling weight per particle required");
  }
  return gather_columns(ensemble.particles(), multinomial_indices(resample_weights, ensemble.size(), id));
}

}  // namespace pipf
