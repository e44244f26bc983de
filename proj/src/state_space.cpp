#include "hestoncal/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hestoncal {

ObservationSeries scalar_observations(std::span<const double> y) {
  ObservationSeries out;
  out.reserve(y.size());
  for (double v : y) out.push_back(Vector::Constant(1, v));
  return out;
}

StepInput step_input(const ObservationSeries& obs, std::size_t k) {
  if (k == 0 || k >= obs.size()) throw Error(ErrorCode::InvalidArgument, "step index out of range");
  return StepInput{static_cast<int>(k), obs[k - 1], obs[k]};
}

Matrix StateSpaceModel::transition_noise_derivative(const Vector&, const StepInput&, int) const {
  return Matrix::Zero(state_dim(), state_dim());
}

Matrix StateSpaceModel::measurement_noise_derivative(const Vector&, const StepInput&, int) const {
  return Matrix::Zero(obs_dim(), obs_dim());
}

Matrix StateSpaceModel::expected_transition_noise(const Vector& mean, const Matrix&,
                                                  const StepInput& in) const {
  return transition_noise(mean, in);
}

Matrix StateSpaceModel::expected_measurement_noise(const Vector& mean, const Matrix&,
                                                   const StepInput& in) const {
  return measurement_noise(mean, in);
}

Matrix psd_sqrt(const Matrix& m) {
  if (m.rows() == 1) return Matrix::Constant(1, 1, std::sqrt(std::max(m(0, 0), 0.0)));
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::DegenerateNoise, "noise covariance is not symmetric PSD");
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

void StateSpaceModel::propagate(const Eigen::MatrixXd& from, Eigen::MatrixXd& to,
                                const StepInput& in, Rng& rng) const {
  const int s = state_dim();
  const Eigen::Index n = from.cols();
  to.resize(s, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(s), z(s);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = from.col(i);
    const Vector m = transition_mean(x, in);
    const Matrix L = psd_sqrt(transition_noise(x, in));
    for (int j = 0; j < s; ++j) z(j) = normal(rng);
    to.col(i) = project(m + L * z);
  }
}

void StateSpaceModel::log_likelihood(const Eigen::MatrixXd& particles, const StepInput& in,
                                     Eigen::VectorXd& out) const {
  const int m = obs_dim();
  const Eigen::Index n = particles.cols();
  out.resize(n);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  Vector x(state_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    x = particles.col(i);
    const Vector e = in.y - measurement_mean(x, in);
    const Matrix R = measurement_noise(x, in);
    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::DegenerateNoise, "measurement noise is not positive definite");
    }
    const Vector w = llt.matrixL().solve(e);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out(i) = -0.5 * (w.squaredNorm() + logdet + m * log2pi);
  }
}

double expected_floored(double mean, double var, double floor) {
  if (!(var > 0.0)) return std::max(mean, floor);
  const double s = std::sqrt(var);
  const double z = (floor - mean) / s;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return floor * cdf + mean * (1.0 - cdf) + s * pdf;
}

HestonStateSpace::HestonStateSpace(const HestonParams& params, double floor)
    : params_(params), floor_(floor) {
  require_valid(params_);
  if (!(floor_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "variance floor must be > 0");
}

Vector HestonStateSpace::transition_mean(const Vector& x, const StepInput& in) const {
  return Vector::Constant(1, hestoncal::transition_mean(x(0), in.y(0) - in.y_prev(0), params_, floor_));
}

Vector HestonStateSpace::transition_mean_unprojected(const Vector& x, const StepInput& in) const {
  return Vector::Constant(1, hestoncal::transition_mean(x(0), in.y(0) - in.y_prev(0), params_,
                                                        -std::numeric_limits<double>::infinity()));
}

Matrix HestonStateSpace::transition_jacobian(const Vector&, const StepInput&) const {
  return Matrix::Constant(1, 1, hestoncal::transition_jacobian(params_));
}

Matrix HestonStateSpace::transition_noise(const Vector& x, const StepInput&) const {
  return Matrix::Constant(1, 1, transition_noise_var(std::max(x(0), floor_), params_));
}

// Below the floor the noise is constant, so the derivatives vanish there.
Matrix HestonStateSpace::transition_noise_derivative(const Vector& x, const StepInput&, int) const {
  const auto& p = params_;
  const double d = x(0) > floor_ ? p.sigma * p.sigma * (1.0 - p.rho * p.rho) * p.dt : 0.0;
  return Matrix::Constant(1, 1, d);
}

Vector HestonStateSpace::measurement_mean(const Vector& x, const StepInput& in) const {
  return Vector::Constant(1, hestoncal::measurement_mean(x(0), in.y_prev(0), params_));
}

Matrix HestonStateSpace::measurement_jacobian(const Vector&, const StepInput&) const {
  return Matrix::Constant(1, 1, hestoncal::measurement_jacobian(params_));
}

Matrix HestonStateSpace::measurement_noise(const Vector& x, const StepInput&) const {
  return Matrix::Constant(1, 1, measurement_noise_var(x(0), params_, floor_));
}

Matrix HestonStateSpace::measurement_noise_derivative(const Vector& x, const StepInput&, int) const {
  return Matrix::Constant(1, 1, x(0) > floor_ ? params_.dt : 0.0);
}

Vector HestonStateSpace::project(const Vector& x) const {
  return Vector::Constant(1, std::max(x(0), floor_));
}

Matrix HestonStateSpace::expected_transition_noise(const Vector& mean, const Matrix& cov,
                                                   const StepInput&) const {
  const auto& p = params_;
  const double ev = expected_floored(mean(0), cov(0, 0), floor_);
  return Matrix::Constant(1, 1, p.sigma * p.sigma * (1.0 - p.rho * p.rho) * p.dt * ev);
}

Matrix HestonStateSpace::expected_measurement_noise(const Vector& mean, const Matrix& cov,
                                                    const StepInput&) const {
  return Matrix::Constant(1, 1, params_.dt * expected_floored(mean(0), cov(0, 0), floor_));
}

void HestonStateSpace::propagate(const Eigen::MatrixXd& from, Eigen::MatrixXd& to,
                                 const StepInput& in, Rng& rng) const {
  const auto& p = params_;
  const Eigen::Index n = from.cols();
  to.resize(1, n);
  const double dy = in.y(0) - in.y_prev(0);
  const double q_scale = p.sigma * p.sigma * (1.0 - p.rho * p.rho) * p.dt;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = from(0, i);
    const double m = hestoncal::transition_mean(v, dy, p, floor_);
    const double sd = std::sqrt(q_scale * std::max(v, floor_));
    to(0, i) = std::max(m + sd * normal(rng), floor_);
  }
}

void HestonStateSpace::log_likelihood(const Eigen::MatrixXd& particles, const StepInput& in,
                                      Eigen::VectorXd& out) const {
  const auto& p = params_;
  const Eigen::Index n = particles.cols();
  out.resize(n);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const double y = in.y(0);
  const double y_prev = in.y_prev(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = particles(0, i);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite state");
    const double e = y - (y_prev + (p.r - 0.5 * v) * p.dt);
    const double R = std::max(v, floor_) * p.dt;
    out(i) = -0.5 * (e * e / R + std::log(R) + log2pi);
  }
}

LinearGaussianModel::LinearGaussianModel(LinearGaussianSpec spec) : spec_(std::move(spec)) {
  const Eigen::Index s = spec_.F.rows();
  const Eigen::Index m = spec_.H.rows();
  if (s < 1 || s > kMaxDim || m < 1 || m > kMaxDim) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be in [1, 4]");
  }
  if (spec_.F.cols() != s || spec_.Q.rows() != s || spec_.Q.cols() != s || spec_.H.cols() != s ||
      spec_.R.rows() != m || spec_.R.cols() != m) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent model matrix shapes");
  }
  if (spec_.b.size() == 0) spec_.b = Vector::Zero(s);
  if (spec_.G.size() == 0) spec_.G = Matrix::Zero(s, m);
  if (spec_.D.size() == 0) spec_.D = Matrix::Zero(m, m);
  if (spec_.b.size() != s || spec_.G.rows() != s || spec_.G.cols() != m || spec_.D.rows() != m ||
      spec_.D.cols() != m) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent model matrix shapes");
  }
}

Vector LinearGaussianModel::transition_mean(const Vector& x, const StepInput& in) const {
  return spec_.F * x + spec_.b + spec_.G * (in.y - in.y_prev);
}

Matrix LinearGaussianModel::transition_jacobian(const Vector&, const StepInput&) const {
  return spec_.F;
}

Matrix LinearGaussianModel::transition_noise(const Vector&, const StepInput&) const { return spec_.Q; }

Vector LinearGaussianModel::measurement_mean(const Vector& x, const StepInput& in) const {
  return spec_.H * x + spec_.D * in.y_prev;
}

Matrix LinearGaussianModel::measurement_jacobian(const Vector&, const StepInput&) const {
  return spec_.H;
}

Matrix LinearGaussianModel::measurement_noise(const Vector&, const StepInput&) const { return spec_.R; }

}  // namespace hestoncal
