#include "hestoncal/heston.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hestoncal {

namespace {

void require_finite(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "non-finite state");
}

}  // namespace

ParamReport validate_params(const HestonParams& p) {
  ParamReport report;
  auto& v = report.violations;
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) v.emplace_back("kappa must be > 0");
  if (!(p.theta > 0.0) || !std::isfinite(p.theta)) v.emplace_back("theta must be > 0");
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) v.emplace_back("sigma must be > 0");
  if (!(p.rho >= -1.0 && p.rho <= 1.0)) v.emplace_back("rho must be in [-1, 1]");
  if (!std::isfinite(p.r)) v.emplace_back("r must be finite");
  if (!(p.dt > 0.0) || !std::isfinite(p.dt)) v.emplace_back("dt must be > 0");
  report.feller = 2.0 * p.kappa * p.theta > p.sigma * p.sigma;
  return report;
}

void require_valid(const HestonParams& p) {
  const ParamReport report = validate_params(p);
  if (report.ok()) return;
  std::ostringstream os;
  os << "invalid Heston parameters:";
  for (const auto& msg : report.violations) os << ' ' << msg << ';';
  throw Error(ErrorCode::InvalidParams, os.str());
}

double transition_mean(double v_prev, double dy, const HestonParams& p, double floor) {
  require_finite(v_prev);
  require_finite(dy);
  const double sr = p.sigma * p.rho;
  const double v = v_prev + p.kappa * (p.theta - v_prev) * p.dt - sr * (p.r - 0.5 * v_prev) * p.dt +
                   sr * dy;
  require_finite(v);
  return std::max(v, floor);
}

double transition_noise_var(double v_prev, const HestonParams& p) {
  require_finite(v_prev);
  return p.sigma * p.sigma * v_prev * (1.0 - p.rho * p.rho) * p.dt;
}

double measurement_mean(double v, double y_prev, const HestonParams& p) {
  require_finite(v);
  require_finite(y_prev);
  return y_prev + (p.r - 0.5 * v) * p.dt;
}

double measurement_noise_var(double v, const HestonParams& p, double floor) {
  require_finite(v);
  return std::max(v, floor) * p.dt;
}

double transition_jacobian(const HestonParams& p) {
  return 1.0 - p.kappa * p.dt + 0.5 * p.sigma * p.rho * p.dt;
}

double measurement_jacobian(const HestonParams& p) { return -0.5 * p.dt; }

HestonSimulator::HestonSimulator(std::uint64_t seed) : seed_(seed), rng_(make_rng(seed, 0)) {}

SimulatedPath HestonSimulator::simulate(const HestonParams& p, double v0, double s0,
                                        std::size_t n) {
  // kappa = 0 and sigma = 0 are accepted here as deterministic limits.
  HestonParams check = p;
  if (check.kappa == 0.0) check.kappa = 1.0;
  if (check.sigma == 0.0) check.sigma = 1.0;
  require_valid(check);
  if (!(v0 > 0.0) || !std::isfinite(v0)) {
    throw Error(ErrorCode::InvalidArgument, "initial variance must be > 0");
  }
  if (!(s0 > 0.0) || !std::isfinite(s0)) {
    throw Error(ErrorCode::InvalidArgument, "initial price must be > 0");
  }
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "simulation needs at least one step");

  SimulatedPath path;
  path.seed = seed_;
  path.variances.reserve(n + 1);
  path.observations.reserve(n + 1);
  path.prices.reserve(n + 1);
  path.dw1.reserve(n);
  path.dw2.reserve(n);

  path.variances.push_back(std::max(v0, kVarianceFloor));
  path.observations.push_back(0.0);
  path.prices.push_back(s0);

  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(p.dt);
  const double indep = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  const double sr = p.sigma * p.rho;
  const double denom = 1.0 + 0.5 * sr * p.dt;
  if (!(denom > 0.0)) throw Error(ErrorCode::InvalidParams, "sigma*rho*dt too negative");

  double v = path.variances.front();
  double y = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z1 = normal(rng_);
    const double zi = normal(rng_);
    const double sqrt_v = std::sqrt(v);
    const double e1 = sqrt_v * sqrt_dt * z1;

    // V_k = A + sigma*rho*(dy_k) with dy_k = (r - V_k/2) dt + e1; solve for V_k.
    const double a = v + p.kappa * (p.theta - v) * p.dt - sr * (p.r - 0.5 * v) * p.dt +
                     p.sigma * sqrt_v * indep * sqrt_dt * zi;
    double v_next = (a + sr * (p.r * p.dt + e1)) / denom;
    if (!(v_next >= kVarianceFloor)) {
      v_next = kVarianceFloor;
      ++path.floor_hits;
    }
    y += (p.r - 0.5 * v_next) * p.dt + e1;
    v = v_next;

    path.variances.push_back(v);
    path.observations.push_back(y);
    path.prices.push_back(s0 * std::exp(y));
    path.dw1.push_back(z1);
    path.dw2.push_back(p.rho * z1 + indep * zi);
  }
  return path;
}

SimulatedPath simulate_path(const HestonParams& p, double v0, double s0, std::size_t n,
                            std::uint64_t seed) {
  HestonSimulator sim(seed);
  return sim.simulate(p, v0, s0, n);
}

}  // namespace hestoncal
