#include "pipf/models.hpp"

#include <cmath>

namespace pipf {

DiffusionModel linear_model(const LinearSystem& system, GaussianPrior prior) {
  const Matrix A = system.A;
  const Matrix sigma = system.sigma;
  if (A.rows() != A.cols() || sigma.rows() != A.rows()) throw ModelError("inconsistent linear model");
  return DiffusionModel(
      A.rows(), sigma.cols(),
      [A](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out.noalias() = A * x; },
      [sigma](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = sigma; }, std::move(prior),
      [A](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = A; });
}

ObservationModel linear_observation(const LinearSystem& system) {
  const Matrix C = system.C;
  return ObservationModel(
      C.rows(), [C](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out.noalias() = C * x; },
      system.sigma_b, [C](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out = C; });
}

LinearSystem ou_system(double kappa, double sigma_b) {
  if (!(kappa > 0.0)) throw ModelError("OU rate kappa must be positive");
  return LinearSystem{Matrix::Constant(1, 1, -kappa), Matrix::Identity(1, 1), Matrix::Identity(1, 1), sigma_b};
}

DiffusionModel benes_model(const BenesParams& params, double prior_var) {
  if (!(params.sigma_w > 0.0)) throw ModelError("Benes sigma_W must be positive");
  const double mu = params.mu;
  const double sw = params.sigma_w;
  return DiffusionModel(
      1, 1,
      [mu, sw](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
        out(0) = mu * sw * std::tanh(mu / sw * x(0));
      },
      [sw](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out(0, 0) = sw; },
      GaussianPrior{Vector::Constant(1, params.x0), Matrix::Constant(1, 1, prior_var)},
      [mu, sw](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Matrix> out) {
        const double c = std::cosh(mu / sw * x(0));
        out(0, 0) = mu * mu / (c * c);
      });
}

ObservationModel benes_observation(const BenesParams& params) {
  if (params.h1 == 0.0) throw ModelError("Benes h1 must be non-zero");
  const double h1 = params.h1;
  const double h2 = params.h2;
  return ObservationModel(
      1, [h1, h2](double, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) { out(0) = h1 * x(0) + h1 * h2; },
      1.0, [h1](double, const Eigen::Ref<const Vector>&, Eigen::Ref<Matrix> out) { out(0, 0) = h1; });
}

LinearSystem random_stable_system(Index n, double sigma_b, const StreamId& id) {
  if (n < 1) throw ModelError("dimension must be positive");
  RandomStream stream(id.with_purpose(StreamPurpose::model_generation).with_window(static_cast<std::uint64_t>(n)));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix A(n, n), C(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) A(i, j) = scale * stream.normal();
  }
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) C(i, j) = scale * stream.normal();
  }
  const Matrix sym = 0.5 * (A + A.transpose());
  const double top = Eigen::SelfAdjointEigenSolver<Matrix>(sym).eigenvalues().maxCoeff();
  if (top > -0.1) A -= (top + 0.1) * Matrix::Identity(n, n);
  return LinearSystem{A, Matrix::Identity(n, n), C, sigma_b};
}

}  // namespace pipf
