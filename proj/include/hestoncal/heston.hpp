#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hestoncal/common.hpp"

namespace hestoncal {

/// Heston parameters. Variance is annualized; dt is the sampling step in years.
struct HestonParams {
  double kappa = 0.0;  // mean-reversion rate
  double theta = 0.0;  // long-run variance
  double sigma = 0.0;  // vol-of-vol
  double rho = 0.0;    // correlation of price and variance shocks
  double r = 0.0;      // risk-free rate
  double dt = 1.0 / 252.0;
};

struct ParamReport {
  std::vector<std::string> violations;
  bool feller = false;  // 2*kappa*theta > sigma^2; tracked, never enforced

  bool ok() const { return violations.empty(); }
};

ParamReport validate_params(const HestonParams& p);

/// Throws ErrorCode::InvalidParams listing every violation.
void require_valid(const HestonParams& p);

// Discretized state equation. `dy` is the observed log-price increment ending
// at the step being predicted; it enters as a known exogenous input.
double transition_mean(double v_prev, double dy, const HestonParams& p,
                       double floor = kVarianceFloor);
double transition_noise_var(double v_prev, const HestonParams& p);

// Discretized measurement equation for y = log(S_t / S_0).
double measurement_mean(double v, double y_prev, const HestonParams& p);
double measurement_noise_var(double v, const HestonParams& p, double floor = kVarianceFloor);

/// d(transition_mean)/dV, ignoring the floor kink.
double transition_jacobian(const HestonParams& p);
/// d(measurement_mean)/dV.
double measurement_jacobian(const HestonParams& p);

struct SimulatedPath {
  // All vectors have n + 1 entries; index 0 holds the initial condition.
  std::vector<double> variances;
  std::vector<double> observations;  // y_k = log(S_k / S_0)
  std::vector<double> prices;
  // Standardized Brownian increments per step (n entries): dw1 drives the
  // price, dw2 = rho*dw1 + sqrt(1-rho^2)*dw_indep drives the variance.
  std::vector<double> dw1;
  std::vector<double> dw2;
  std::uint64_t seed = 0;
  std::size_t floor_hits = 0;
};

/// Ground-truth generator. Each step solves the discretized state and
/// measurement equations jointly (V_k appears linearly in the measurement
/// drift), then applies the variance floor.
class HestonSimulator {
 public:
  explicit HestonSimulator(std::uint64_t seed);

  SimulatedPath simulate(const HestonParams& p, double v0, double s0, std::size_t n);

 private:
  std::uint64_t seed_;
  Rng rng_;
};

SimulatedPath simulate_path(const HestonParams& p, double v0, double s0, std::size_t n,
                            std::uint64_t seed);

}  // namespace hestoncal
