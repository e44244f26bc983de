#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hestoncal/common.hpp"
#include "hestoncal/heston.hpp"

namespace hestoncal {

/// Everything a model may condition on when moving from step k-1 to step k.
struct StepInput {
  int t_index = 0;  // k
  Vector y_prev;    // y_{k-1}
  Vector y;         // y_k
};

using ObservationSeries = std::vector<Vector>;

/// Wraps a scalar observation sequence (e.g. log price ratios).
ObservationSeries scalar_observations(std::span<const double> y);

/// Input for step k >= 1 of an observation series.
StepInput step_input(const ObservationSeries& obs, std::size_t k);

/// Nonlinear state-space model
///   x_k = f(x_{k-1}; input) + N(0, Q(x_{k-1}))
///   y_k = g(x_k; input)     + N(0, R(x_k))
/// with Jacobians for linearizing filters and the Fisher-information recursion.
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;

  virtual Vector transition_mean(const Vector& x, const StepInput& in) const = 0;
  /// transition_mean before projection onto the admissible set.
  virtual Vector transition_mean_unprojected(const Vector& x, const StepInput& in) const {
    return transition_mean(x, in);
  }
  virtual Matrix transition_jacobian(const Vector& x, const StepInput& in) const = 0;
  virtual Matrix transition_noise(const Vector& x, const StepInput& in) const = 0;
  /// dQ/dx_i. Zero for state-independent noise.
  virtual Matrix transition_noise_derivative(const Vector& x, const StepInput& in, int i) const;

  virtual Vector measurement_mean(const Vector& x, const StepInput& in) const = 0;
  virtual Matrix measurement_jacobian(const Vector& x, const StepInput& in) const = 0;
  virtual Matrix measurement_noise(const Vector& x, const StepInput& in) const = 0;
  /// dR/dx_i. Zero for state-independent noise.
  virtual Matrix measurement_noise_derivative(const Vector& x, const StepInput& in, int i) const;

  /// Maps a state onto the admissible set (e.g. the variance floor).
  virtual Vector project(const Vector& x) const { return x; }

  // Noise covariance averaged over x ~ N(mean, cov). Gaussian filters use
  // these; the defaults evaluate at the mean.
  virtual Matrix expected_transition_noise(const Vector& mean, const Matrix& cov,
                                           const StepInput& in) const;
  virtual Matrix expected_measurement_noise(const Vector& mean, const Matrix& cov,
                                            const StepInput& in) const;

  // Particle hooks over column-stored clouds (state_dim x N). The defaults
  // are written against the per-state virtuals above; models may override
  // with equivalent vectorized code.
  virtual void propagate(const Eigen::MatrixXd& from, Eigen::MatrixXd& to, const StepInput& in,
                         Rng& rng) const;
  virtual void log_likelihood(const Eigen::MatrixXd& particles, const StepInput& in,
                              Eigen::VectorXd& out) const;
};

/// Symmetric square root L with L*L^T = m for PSD m (Cholesky when possible).
Matrix psd_sqrt(const Matrix& m);

/// Heston variance as the latent state, y = log(S/S0) as the observation. The
/// observed increment y_k - y_{k-1} is the exogenous input to the transition,
/// and the measurement noise is evaluated at the current state.
class HestonStateSpace final : public StateSpaceModel {
 public:
  explicit HestonStateSpace(const HestonParams& params, double floor = kVarianceFloor);

  const HestonParams& params() const { return params_; }
  double floor() const { return floor_; }

  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }

  Vector transition_mean(const Vector& x, const StepInput& in) const override;
  Vector transition_mean_unprojected(const Vector& x, const StepInput& in) const override;
  Matrix transition_jacobian(const Vector& x, const StepInput& in) const override;
  Matrix transition_noise(const Vector& x, const StepInput& in) const override;
  Matrix transition_noise_derivative(const Vector& x, const StepInput& in, int i) const override;
  Vector measurement_mean(const Vector& x, const StepInput& in) const override;
  Matrix measurement_jacobian(const Vector& x, const StepInput& in) const override;
  Matrix measurement_noise(const Vector& x, const StepInput& in) const override;
  Matrix measurement_noise_derivative(const Vector& x, const StepInput& in, int i) const override;
  Vector project(const Vector& x) const override;
  Matrix expected_transition_noise(const Vector& mean, const Matrix& cov,
                                   const StepInput& in) const override;
  Matrix expected_measurement_noise(const Vector& mean, const Matrix& cov,
                                    const StepInput& in) const override;
  void propagate(const Eigen::MatrixXd& from, Eigen::MatrixXd& to, const StepInput& in,
                 Rng& rng) const override;
  void log_likelihood(const Eigen::MatrixXd& particles, const StepInput& in,
                      Eigen::VectorXd& out) const override;

 private:
  HestonParams params_;
  double floor_;
};

/// E[max(X, floor)] for X ~ N(mean, var).
double expected_floored(double mean, double var, double floor);

struct LinearGaussianSpec {
  Matrix F;  // s x s transition
  Matrix Q;  // s x s process noise
  Matrix H;  // m x s measurement
  Matrix R;  // m x m measurement noise
  Vector b;  // transition offset (optional)
  Matrix G;  // s x m gain on y_k - y_{k-1} (optional)
  Matrix D;  // m x m carry of y_{k-1} into the measurement (optional)
};

/// x_k = F x + b + G (y_k - y_{k-1}) + N(0,Q);  y_k = H x_k + D y_{k-1} + N(0,R).
class LinearGaussianModel final : public StateSpaceModel {
 public:
  explicit LinearGaussianModel(LinearGaussianSpec spec);

  const LinearGaussianSpec& spec() const { return spec_; }

  int state_dim() const override { return static_cast<int>(spec_.F.rows()); }
  int obs_dim() const override { return static_cast<int>(spec_.H.rows()); }

  Vector transition_mean(const Vector& x, const StepInput& in) const override;
  Matrix transition_jacobian(const Vector& x, const StepInput& in) const override;
  Matrix transition_noise(const Vector& x, const StepInput& in) const override;
  Vector measurement_mean(const Vector& x, const StepInput& in) const override;
  Matrix measurement_jacobian(const Vector& x, const StepInput& in) const override;
  Matrix measurement_noise(const Vector& x, const StepInput& in) const override;

 private:
  LinearGaussianSpec spec_;
};

}  // namespace hestoncal
