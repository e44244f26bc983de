#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hestoncal/heston.hpp"

namespace hestoncal {

// Closed-form normal maximum likelihood for a CIR variance series V_0..V_n
// sampled every dt, from the Gaussian approximation of the sqrt(V) transition
//   sqrt(V_k) = sqrt(V_{k-1}) + dt/(2 sqrt(V_{k-1})) (P - kappa V_{k-1}) + (sigma/2) sqrt(dt) e_k
// with P = kappa*theta - sigma^2/4. Evaluation order is P -> kappa -> sigma -> theta.

/// Throws DegenerateSeries when the denominator vanishes (e.g. constant series).
double estimate_p(std::span<const double> v, double dt);
double estimate_kappa(std::span<const double> v, double dt, double p_hat);
double estimate_sigma(std::span<const double> v, double dt, double p_hat, double kappa_hat);
/// (P + sigma^2/4) / kappa. Throws DegenerateSeries unless kappa_hat > 0.
double estimate_theta(double p_hat, double sigma_hat, double kappa_hat);

struct BrownianIncrements {
  std::vector<double> dw1;  // price shocks
  std::vector<double> dw2;  // variance shocks
};

/// Recovers the driving increments from log prices and variances (both n + 1
/// long) under the given parameters.
BrownianIncrements reconstruct_increments(std::span<const double> log_prices, std::span<const double> v,
                                          const HestonParams& p);

/// sum(dw1 * dw2) / (n dt), clamped to [-1, 1]; `clamped` reports a clamp.
double rho_from_increments(std::span<const double> dw1, std::span<const double> dw2, double dt,
                           bool* clamped = nullptr);

double estimate_rho(std::span<const double> log_prices, std::span<const double> v, const HestonParams& p,
                    bool* clamped = nullptr);

struct NmleEstimate {
  double kappa_hat = 0.0;
  double sigma_hat = 0.0;
  double theta_hat = 0.0;
  double p_hat = 0.0;
  double rho_hat = 0.0;
  bool rho_estimated = false;
  bool rho_clamped = false;
  std::size_t n_used = 0;
  bool degenerate = false;
  std::string reason;  // why the estimate is degenerate
};

/// Runs the estimator chain and flags, rather than throws on, degenerate
/// input or a non-positive kappa/theta/sigma.
NmleEstimate nmle_fit(std::span<const double> v, double dt);

}  // namespace hestoncal
