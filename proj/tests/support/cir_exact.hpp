#pragma once

// Exact CIR transition sampling: V_{k+1} = c * chi2'(df, nc) with the
// noncentral chi-square drawn as a Poisson mixture of central chi-squares.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

inline std::vector<double> simulate_cir_exact(double kappa, double theta, double sigma, double dt, double v0,
                                              std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double decay = std::exp(-kappa * dt);
  const double c = sigma * sigma * (1.0 - decay) / (4.0 * kappa);
  const double df = 4.0 * kappa * theta / (sigma * sigma);
  std::vector<double> v(n + 1);
  v[0] = v0;
  for (std::size_t k = 0; k < n; ++k) {
    const double nc = v[k] * decay / c;
    std::poisson_distribution<long> poisson(0.5 * nc);
    const long j = nc > 0.0 ? poisson(rng) : 0;
    std::gamma_distribution<double> gamma(0.5 * df + static_cast<double>(j), 2.0);
    v[k + 1] = c * gamma(rng);
  }
  return v;
}

}  // namespace oracle
