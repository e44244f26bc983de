#include "hestoncal/nmle.hpp"

#include <algorithm>
#include <cmath>

#include "hestoncal/common.hpp"

namespace hestoncal {

namespace {

void require_series(std::span<const double> v, double dt) {
  if (v.size() < 2) throw Error(ErrorCode::InvalidArgument, "volatility series needs at least two values");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite state");
    if (x < kVarianceFloor) throw Error(ErrorCode::InvalidArgument, "variance below the positivity floor");
  }
}

}  // namespace

double estimate_p(std::span<const double> v, double dt) {
  require_series(v, dt);
  const std::size_t n = v.size() - 1;
  CompensatedSum s_cross, s_ratio, s_prev, s_inv;
  for (std::size_t k = 1; k <= n; ++k) {
    s_cross.add(std::sqrt(v[k - 1] * v[k]));
    s_ratio.add(std::sqrt(v[k] / v[k - 1]));
    s_prev.add(v[k - 1]);
    s_inv.add(1.0 / v[k - 1]);
  }
  const double nn = static_cast<double>(n);
  const double num = s_cross.value() / nn - s_ratio.value() * s_prev.value() / (nn * nn);
  const double den = 0.5 * dt - 0.5 * dt * s_inv.value() * s_prev.value() / (nn * nn);
  if (!(std::abs(den) > 1e-12)) throw Error(ErrorCode::DegenerateSeries, "degenerate volatility series");
  return num / den;
}

double estimate_kappa(std::span<const double> v, double dt, double p_hat) {
  require_series(v, dt);
  const std::size_t n = v.size() - 1;
  CompensatedSum s_inv, s_ratio;
  for (std::size_t k = 1; k <= n; ++k) {
    s_inv.add(1.0 / v[k - 1]);
    s_ratio.add(std::sqrt(v[k] / v[k - 1]));
  }
  const double nn = static_cast<double>(n);
  return (2.0 / dt) * (1.0 + 0.5 * p_hat * dt * s_inv.value() / nn - s_ratio.value() / nn);
}

double estimate_sigma(std::span<const double> v, double dt, double p_hat, double kappa_hat) {
  require_series(v, dt);
  const std::size_t n = v.size() - 1;
  CompensatedSum ss;
  for (std::size_t k = 1; k <= n; ++k) {
    const double sp = std::sqrt(v[k - 1]);
    const double e = std::sqrt(v[k]) - sp - dt / (2.0 * sp) * (p_hat - kappa_hat * v[k - 1]);
    ss.add(e * e);
  }
  return std::sqrt(4.0 / dt * ss.value() / static_cast<double>(n));
}

double estimate_theta(double p_hat, double sigma_hat, double kappa_hat) {
  if (!(kappa_hat > 0.0)) throw Error(ErrorCode::DegenerateSeries, "kappa estimate must be > 0");
  return (p_hat + 0.25 * sigma_hat * sigma_hat) / kappa_hat;
}

BrownianIncrements reconstruct_increments(std::span<const double> log_prices, std::span<const double> v,
                                          const HestonParams& p) {
  if (log_prices.size() != v.size()) throw Error(ErrorCode::InvalidArgument, "misaligned price and volatility series");
  require_series(v, p.dt);
  if (!(p.sigma > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma must be > 0");
  BrownianIncrements inc;
  const std::size_t n = v.size() - 1;
  inc.dw1.reserve(n);
  inc.dw2.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double sp = std::sqrt(v[k - 1]);
    inc.dw1.push_back((log_prices[k] - log_prices[k - 1] - (p.r - 0.5 * v[k - 1]) * p.dt) / sp);
    inc.dw2.push_back((v[k] - v[k - 1] - p.kappa * (p.theta - v[k - 1]) * p.dt) / (p.sigma * sp));
  }
  return inc;
}

double rho_from_increments(std::span<const double> dw1, std::span<const double> dw2, double dt, bool* clamped) {
  if (dw1.size() != dw2.size()) throw Error(ErrorCode::InvalidArgument, "misaligned increment series");
  if (dw1.empty()) throw Error(ErrorCode::InvalidArgument, "no increments");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  CompensatedSum s;
  for (std::size_t k = 0; k < dw1.size(); ++k) s.add(dw1[k] * dw2[k]);
  const double rho = s.value() / (static_cast<double>(dw1.size()) * dt);
  if (!std::isfinite(rho)) throw Error(ErrorCode::NonFinite, "non-finite correlation estimate");
  const double out = std::clamp(rho, -1.0, 1.0);
  if (clamped) *clamped = out != rho;
  if (out != rho) log_message(LogLevel::Info, "rho estimate " + std::to_string(rho) + " clamped to [-1, 1]");
  return out;
}

double estimate_rho(std::span<const double> log_prices, std::span<const double> v, const HestonParams& p,
                    bool* clamped) {
  const BrownianIncrements inc = reconstruct_increments(log_prices, v, p);
  return rho_from_increments(inc.dw1, inc.dw2, p.dt, clamped);
}

NmleEstimate nmle_fit(std::span<const double> v, double dt) {
  NmleEstimate e;
  e.n_used = v.size() > 0 ? v.size() - 1 : 0;
  try {
    e.p_hat = estimate_p(v, dt);
    e.kappa_hat = estimate_kappa(v, dt, e.p_hat);
    e.sigma_hat = estimate_sigma(v, dt, e.p_hat, e.kappa_hat);
    if (!(e.kappa_hat > 0.0)) {
      e.degenerate = true;
      e.reason = "kappa estimate must be > 0";
      return e;
    }
    e.theta_hat = estimate_theta(e.p_hat, e.sigma_hat, e.kappa_hat);
  } catch (const Error& err) {
    e.degenerate = true;
    e.reason = err.what();
    return e;
  }
  if (!std::isfinite(e.kappa_hat) || !std::isfinite(e.theta_hat) || !std::isfinite(e.sigma_hat)) {
    e.degenerate = true;
    e.reason = "non-finite estimate";
  } else if (!(e.theta_hat > 0.0)) {
    e.degenerate = true;
    e.reason = "theta estimate must be > 0";
  } else if (!(e.sigma_hat > 0.0)) {
    e.degenerate = true;
    e.reason = "sigma estimate must be > 0";
  }
  return e;
}

}  // namespace hestoncal
