#pragma once

// Two-regime test model. Up to `boundary` the state follows a square-root
// diffusion observed only through the size of the returns (Heston with rho=0),
// which a particle filter exploits and Gaussian filters cannot. Afterwards the
// state follows a linear-Gaussian AR(1) observed directly, where the EKF is the
// exact Kalman filter.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hestoncal/state_space.hpp"

namespace oracle {

struct TwoRegimeSetup {
  hestoncal::HestonParams sv{2.0, 0.2, 0.9, 0.0, 0.0, 1.0 / 252.0};
  double ar = 0.95;
  double ar_q = 4e-5;
  double obs_r = 1e-4;
  int boundary = 500;

  double ar_offset() const { return (1.0 - ar) * sv.theta; }
};

inline hestoncal::LinearGaussianSpec ar_spec(const TwoRegimeSetup& s) {
  hestoncal::LinearGaussianSpec spec;
  spec.F = hestoncal::Matrix::Constant(1, 1, s.ar);
  spec.Q = hestoncal::Matrix::Constant(1, 1, s.ar_q);
  spec.H = hestoncal::Matrix::Constant(1, 1, 1.0);
  spec.R = hestoncal::Matrix::Constant(1, 1, s.obs_r);
  spec.b = hestoncal::Vector::Constant(1, s.ar_offset());
  spec.D = hestoncal::Matrix::Constant(1, 1, 1.0);
  return spec;
}

class TwoRegimeModel final : public hestoncal::StateSpaceModel {
 public:
  using Vector = hestoncal::Vector;
  using Matrix = hestoncal::Matrix;
  using StepInput = hestoncal::StepInput;

  explicit TwoRegimeModel(const TwoRegimeSetup& s) : setup_(s), sv_(s.sv), lin_(ar_spec(s)) {}

  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }

  Vector transition_mean(const Vector& x, const StepInput& in) const override { return m(in).transition_mean(x, in); }
  Vector transition_mean_unprojected(const Vector& x, const StepInput& in) const override {
    return m(in).transition_mean_unprojected(x, in);
  }
  Matrix transition_jacobian(const Vector& x, const StepInput& in) const override { return m(in).transition_jacobian(x, in); }
  Matrix transition_noise(const Vector& x, const StepInput& in) const override { return m(in).transition_noise(x, in); }
  Matrix transition_noise_derivative(const Vector& x, const StepInput& in, int i) const override {
    return m(in).transition_noise_derivative(x, in, i);
  }
  Vector measurement_mean(const Vector& x, const StepInput& in) const override { return m(in).measurement_mean(x, in); }
  Matrix measurement_jacobian(const Vector& x, const StepInput& in) const override { return m(in).measurement_jacobian(x, in); }
  Matrix measurement_noise(const Vector& x, const StepInput& in) const override { return m(in).measurement_noise(x, in); }
  Matrix measurement_noise_derivative(const Vector& x, const StepInput& in, int i) const override {
    return m(in).measurement_noise_derivative(x, in, i);
  }
  Vector project(const Vector& x) const override { return sv_.project(x); }
  Matrix expected_transition_noise(const Vector& mean, const Matrix& cov, const StepInput& in) const override {
    return m(in).expected_transition_noise(mean, cov, in);
  }
  Matrix expected_measurement_noise(const Vector& mean, const Matrix& cov, const StepInput& in) const override {
    return m(in).expected_measurement_noise(mean, cov, in);
  }
  void propagate(const Eigen::MatrixXd& from, Eigen::MatrixXd& to, const StepInput& in,
                 hestoncal::Rng& rng) const override {
    m(in).propagate(from, to, in, rng);
  }
  void log_likelihood(const Eigen::MatrixXd& particles, const StepInput& in, Eigen::VectorXd& out) const override {
    m(in).log_likelihood(particles, in, out);
  }

  bool first_regime(int t_index) const { return t_index <= setup_.boundary; }

 private:
  const hestoncal::StateSpaceModel& m(const StepInput& in) const {
    return first_regime(in.t_index) ? static_cast<const hestoncal::StateSpaceModel&>(sv_) : lin_;
  }

  TwoRegimeSetup setup_;
  hestoncal::HestonStateSpace sv_;
  hestoncal::LinearGaussianModel lin_;
};

struct TwoRegimePath {
  std::vector<double> x;  // 0..n
  std::vector<double> y;  // 0..n
};

inline TwoRegimePath simulate_two_regime(const TwoRegimeSetup& s, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto& p = s.sv;
  TwoRegimePath path;
  path.x.push_back(p.theta);
  path.y.push_back(0.0);
  for (int k = 1; k <= n; ++k) {
    const double xp = path.x.back();
    const double yp = path.y.back();
    double x = 0.0;
    double y = 0.0;
    if (k <= s.boundary) {
      x = xp + p.kappa * (p.theta - xp) * p.dt + p.sigma * std::sqrt(xp * p.dt) * normal(rng);
      x = std::max(x, hestoncal::kVarianceFloor);
      y = yp + (p.r - 0.5 * x) * p.dt + std::sqrt(x * p.dt) * normal(rng);
    } else {
      x = s.ar * xp + s.ar_offset() + std::sqrt(s.ar_q) * normal(rng);
      y = yp + x + std::sqrt(s.obs_r) * normal(rng);
    }
    path.x.push_back(x);
    path.y.push_back(y);
  }
  return path;
}

}  // namespace oracle
