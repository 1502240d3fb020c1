#include "pipf/metrics.hpp"
#include "pipf/models.hpp"
#include "pipf/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pipf;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

ObservationRecord record_from(const ObservationModel& obs, const DiffusionModel& model, const TimeGrid& grid,
                              double x0, std::uint64_t seed) {
  const StreamId id{seed, 0, StreamPurpose::truth};
  const StatePath truth = simulate_path(model, grid, zero_policy(model.noise_dim()), scalar(x0),
                                        draw_noise(id, model.noise_dim(), grid.steps(), grid.dt()));
  return generate_observations(obs, grid, truth, id.with_purpose(StreamPurpose::observation));
}

}  // namespace

TEST(Sir, BlindSensorKeepsWeights) {
  const LinearSystem sys = ou_system(1.0, 1.0);
  const DiffusionModel model = linear_model(sys, GaussianPrior{Vector::Zero(1), Matrix::Identity(1, 1)});
  const ObservationModel blind(
      1, [](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Vector> out) { out.setZero(); }, 1.0);
  const TimeGrid grid(0.0, 0.01, 10);
  const ObservationRecord record = record_from(blind, model, grid, 0.0, 1);
  SirSettings s;
  s.particles = 30;
  for (const auto& o : sir_run(model, blind, record, grid, s, StreamId{2})) {
    EXPECT_LT((o.posterior.weights().array() - 1.0 / 30).abs().maxCoeff(), 1e-15);
    EXPECT_FALSE(o.resampled);
  }
}

TEST(Sir, LargeEnsembleTracksKalmanBucy) {
  const LinearSystem sys = ou_system(1.0, 0.5);
  const GaussianPrior prior{Vector::Zero(1), Matrix::Identity(1, 1)};
  const DiffusionModel model = linear_model(sys, prior);
  const ObservationModel obs = linear_observation(sys);
  // Fine step so the continuous-time oracle and the discrete filter agree.
  const TimeGrid grid(0.0, 0.001, 500);
  const ObservationRecord record = record_from(obs, model, grid, 0.6, 4);
  const auto kb = kalman_bucy_run(sys, prior, record, grid);
  SirSettings s;
  s.particles = 10000;
  const auto out = sir_run(model, obs, record, grid, s, StreamId{4});
  for (std::size_t j = 0; j < out.size(); j += 25) {
    const Moments m = ensemble_moments(out[j].posterior);
    const double se = std::sqrt(m.cov(0, 0) / (s.particles * out[j].effective_ratio));
    EXPECT_LT(std::abs(m.mean(0) - kb[j].mean(0)), 3.0 * se) << "step " << j;
  }
}

TEST(Sir, ParticleAtTruthTakesAllWeight) {
  // Noise-free dynamics so the particle at the truth stays on it.
  const DiffusionModel model(
      1, 1, [](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = -x; },
      [](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out.setZero(); },
      GaussianPrior{Vector::Zero(1), Matrix::Identity(1, 1)});
  const ObservationModel obs(
      1, [](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out = x; }, 1e-3);
  const TimeGrid grid(0.0, 0.01, 1);
  const ObservationRecord record = record_from(obs, model, grid, 1.0, 6);
  SirState state{0, Matrix(1, 4), std::vector<double>(4, 0.0)};
  state.particles << 1.0, 0.8, 1.3, -0.5;
  SirSettings s;
  s.resample = false;
  const FilterOutput out = sir_step(state, model, obs, record, grid, s, StreamId{6});
  EXPECT_GT(out.posterior.weight(0), 1.0 - 1e-9);
}

TEST(KalmanBucy, StationaryVarianceIsRiccatiRoot) {
  const LinearSystem sys = ou_system(1.0, 1.0);
  KalmanBucyState st{scalar(0.0), Matrix::Identity(1, 1)};
  for (int j = 0; j < 2000; ++j) st = kalman_bucy_step(st, sys, scalar(0.0), 0.01);
  EXPECT_NEAR(st.cov(0, 0), std::sqrt(2.0) - 1.0, 1e-8);
}

TEST(KalmanBucy, ScalarStepMatchesDisplayedEquations) {
  const double kappa = 0.7, dt = 0.02, m = 0.3, P = 0.9, dy = 0.05;
  const LinearSystem sys = ou_system(kappa, 1.0);
  const KalmanBucyState next = kalman_bucy_step({scalar(m), Matrix::Constant(1, 1, P)}, sys, scalar(dy), dt);
  EXPECT_NEAR(next.mean(0), m - kappa * m * dt + P * (dy - m * dt), 1e-15);
  EXPECT_NEAR(next.cov(0, 0), P + (-2.0 * kappa * P - P * P + 1.0) * dt, 1e-15);
}

TEST(KalmanBucy, NoObservationFollowsPriorAndLyapunov) {
  LinearSystem sys = ou_system(1.0, 1.0);
  sys.C.setZero();
  KalmanBucyState st{scalar(2.0), Matrix::Constant(1, 1, 0.5)};
  double m = 2.0, P = 0.5;
  for (int j = 0; j < 100; ++j) {
    st = kalman_bucy_step(st, sys, scalar(0.37), 0.01);
    m *= 0.99;
    P += (-2.0 * P + 1.0) * 0.01;
  }
  EXPECT_NEAR(st.mean(0), m, 1e-13);
  EXPECT_NEAR(st.cov(0, 0), P, 1e-13);
}

TEST(KalmanBucy, ZeroInnovationIsPureDrift) {
  const LinearSystem sys = random_stable_system(3, 1.0, StreamId{3});
  KalmanBucyState st{Vector::Constant(3, 1.0), Matrix::Identity(3, 3)};
  const double dt = 0.01;
  const Vector dy = sys.C * st.mean * dt;
  const KalmanBucyState next = kalman_bucy_step(st, sys, dy, dt);
  EXPECT_LT((next.mean - (st.mean + sys.A * st.mean * dt)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(KalmanBucy, LossOfDefinitenessIsOracleFailure) {
  const LinearSystem sys = ou_system(1.0, 1.0);
  EXPECT_THROW(kalman_bucy_step({scalar(0.0), Matrix::Identity(1, 1)}, sys, scalar(0.0), 5.0), OracleFailure);
}

TEST(KalmanBucy, StaysSpdOnBenchmark) {
  const LinearSystem sys = ou_system(1.0, 1.0);
  const GaussianPrior prior{Vector::Zero(1), Matrix::Identity(1, 1)};
  const TimeGrid grid(0.0, 0.01, 600);
  const ObservationRecord record =
      record_from(linear_observation(sys), linear_model(sys, prior), grid, 0.0, 8);
  for (const auto& st : kalman_bucy_run(sys, prior, record, grid)) EXPECT_GT(st.cov(0, 0), 0.0);
}

TEST(Benes, LargeTimeLimits) {
  const BenesParams p{1.5, 1.0, 1.0, 0.0, -5.0};
  const TimeGrid grid(0.0, 0.01, 2000);
  const ObservationRecord record(Matrix::Zero(1, 2001));
  const BenesPosterior post = benes_posterior(p, record, grid, 2000);
  EXPECT_NEAR(post.var, 1.0, 1e-12);
  EXPECT_NEAR(post.b, 1.5, 1e-12);
}

TEST(Benes, ZeroMuCollapsesModes) {
  const BenesParams p{0.0, 1.0, 1.0, 0.0, -2.0};
  const DiffusionModel model = benes_model(p);
  const ObservationModel obs = benes_observation(p);
  const TimeGrid grid(0.0, 0.01, 100);
  const ObservationRecord record = record_from(obs, model, grid, -2.0, 2);
  const BenesPosterior post = benes_posterior(p, record, grid, 100);
  EXPECT_EQ(post.b, 0.0);
  EXPECT_NEAR(post.mean(), post.a, 1e-15);
  EXPECT_NEAR(post.variance(), post.var, 1e-15);
}

TEST(Benes, RejectsTimeZeroAndBadParameters) {
  const TimeGrid grid(0.0, 0.01, 10);
  const ObservationRecord record(Matrix::Zero(1, 11));
  EXPECT_THROW(benes_posterior(BenesParams{}, record, grid, 0), UsageError);
  EXPECT_THROW(benes_posterior(BenesParams{1.0, 0.0, 1.0, 0.0, 0.0}, record, grid, 3), ModelError);
  EXPECT_THROW(benes_posterior(BenesParams{1.0, 1.0, 0.0, 0.0, 0.0}, record, grid, 3), ModelError);
}

TEST(Benes, NoDataShortTimeStaysAtInitialState) {
  const BenesParams p{1.0, 1.0, 1.0, 0.4, -3.0};
  const TimeGrid grid(0.0, 1e-6, 10);
  const ObservationRecord record(Matrix::Zero(1, 11));
  const BenesPosterior post = benes_posterior(p, record, grid, 1);
  EXPECT_NEAR(post.a, -3.0, 1e-9);
  EXPECT_NEAR(post.var, 1e-6, 1e-12);
}

TEST(Benes, PsiIsLinearInTheRecord) {
  const BenesParams p{1.0, 1.0, 1.0, 0.0, -5.0};
  const DiffusionModel model = benes_model(p);
  const ObservationModel obs = benes_observation(p);
  const TimeGrid grid(0.0, 0.001, 3000);
  const ObservationRecord record = record_from(obs, model, grid, -5.0, 5);
  const BenesPosterior one = benes_posterior(p, record, grid, 3000);
  const BenesPosterior two = benes_posterior(p, record.scaled(2.0), grid, 3000);
  const double offset = p.x0 / std::cosh(3.0);
  EXPECT_NEAR(two.a - offset, 2.0 * (one.a - offset), 1e-12);
}

TEST(Benes, SeriesMatchesPointwise) {
  const BenesParams p;
  const DiffusionModel model = benes_model(p);
  const ObservationModel obs = benes_observation(p);
  const TimeGrid grid(0.0, 0.001, 500);
  const ObservationRecord record = record_from(obs, model, grid, -5.0, 9);
  const auto series = benes_posterior_series(p, record, grid);
  EXPECT_EQ(series[0].a, -5.0);
  EXPECT_EQ(series[0].var, 0.0);
  for (std::size_t j : {1u, 77u, 500u}) {
    const BenesPosterior q = benes_posterior(p, record, grid, j);
    EXPECT_NEAR(series[j].a, q.a, 1e-12);
    EXPECT_NEAR(series[j].omega, q.omega, 1e-12);
  }
}

TEST(BenesDensity, SingleComponentWhenOmegaIsOne) {
  const BenesPosterior post{1.0, 0.5, 2.0, 0.7};
  const Vector x = uniform_grid(-6, 6, 101);
  const Vector d = benes_density(post, x);
  for (Index i = 0; i < x.size(); ++i) {
    const double z = x(i) + 1.5;
    EXPECT_NEAR(d(i), std::exp(-z * z / 1.4) / std::sqrt(2 * M_PI * 0.7), 1e-15);
  }
}

TEST(BenesDensity, SymmetricAndNormalized) {
  const BenesPosterior post{0.5, 0.0, 1.8, 0.4};
  const Vector x = uniform_grid(-10 * std::sqrt(0.4) - 1.8, 10 * std::sqrt(0.4) + 1.8, 4001);
  const Vector d = benes_density(post, x);
  for (Index i = 0; i < x.size(); ++i) EXPECT_NEAR(d(i), d(x.size() - 1 - i), 1e-14);
  EXPECT_TRUE((d.array() >= 0.0).all());
  const double mass = trapezoid(x, d);
  EXPECT_GE(mass, 0.999);
  EXPECT_LE(mass, 1.001);
  EXPECT_TRUE(post.bimodal());
}
