#include "hestoncal/calibration.hpp"

#include <memory>
#include <sstream>

namespace hestoncal {

namespace {

std::string describe(const HestonParams& p) {
  std::ostringstream os;
  os.precision(6);
  os << "kappa=" << p.kappa << " theta=" << p.theta << " sigma=" << p.sigma << " rho=" << p.rho;
  return os.str();
}

}  // namespace

CalibrationResult calibrate(std::span<const double> y, const HestonParams& init, const CalibrationConfig& config) {
  require_valid(init);
  if (config.warmup < 1) throw Error(ErrorCode::InvalidArgument, "warmup must be >= 1");
  if (config.refit_interval < 0) throw Error(ErrorCode::InvalidArgument, "refit interval must be >= 0");
  if (config.nmle_window < 0 || config.nmle_window == 1) {
    throw Error(ErrorCode::InvalidArgument, "NMLE window must be 0 or >= 2");
  }
  if (y.size() < static_cast<std::size_t>(config.warmup) + 2) {
    throw Error(ErrorCode::InvalidArgument, "series shorter than warmup + 2");
  }

  CalibrationResult result;
  result.final_params = init;
  result.trajectory.push_back(TrajectoryRow{0, init, true, {}});
  result.run.bank = config.switching.bank;

  auto model = std::make_unique<HestonStateSpace>(init);
  SwitchingPipeline pipeline(config.switching);
  pipeline.reset(*model, data_driven_prior(y, init.dt, config.switching.prior_window));
  const ObservationSeries obs = scalar_observations(y);

  for (std::size_t k = 1; k < obs.size(); ++k) {
    result.run.append(pipeline.step(*model, step_input(obs, k)));

    const int t = static_cast<int>(k);
    if (config.refit_interval == 0 || t < config.warmup || (t - config.warmup) % config.refit_interval != 0) continue;

    const std::vector<double>& track = result.run.variance;
    std::size_t first = 0;
    if (config.nmle_window > 0 && track.size() > static_cast<std::size_t>(config.nmle_window)) {
      first = track.size() - static_cast<std::size_t>(config.nmle_window);
    }
    const std::span<const double> window(track.data() + first, track.size() - first);

    ++result.refits;
    TrajectoryRow row;
    row.step = t;
    row.estimate = nmle_fit(window, init.dt);
    HestonParams candidate = result.final_params;
    std::string reason = row.estimate.reason;
    if (!row.estimate.degenerate) {
      candidate.kappa = row.estimate.kappa_hat;
      candidate.theta = row.estimate.theta_hat;
      candidate.sigma = row.estimate.sigma_hat;
      if (!config.fix_rho) {
        try {
          // Variance track entry i belongs to observation i + 1.
          const std::span<const double> logp(y.data() + 1 + first, window.size());
          candidate.rho = estimate_rho(logp, window, candidate, &row.estimate.rho_clamped);
          row.estimate.rho_hat = candidate.rho;
          row.estimate.rho_estimated = true;
        } catch (const Error& e) {
          reason = e.what();
        }
      }
      const ParamReport report = validate_params(candidate);
      if (!report.ok()) reason = report.violations.front();
    }

    row.accepted = reason.empty();
    if (row.accepted) {
      result.final_params = candidate;
      ++result.accepted_refits;
      model = std::make_unique<HestonStateSpace>(candidate);
      log_message(LogLevel::Info, "refit at step " + std::to_string(t) + ": " + describe(candidate));
    } else {
      log_message(LogLevel::Warning, "refit at step " + std::to_string(t) + " rejected: " + reason);
    }
    row.params = result.final_params;
    result.trajectory.push_back(std::move(row));
  }
  return result;
}

HestonParams draw_initial_params(const ParamRanges& ranges, double rho, double r, double dt, std::uint64_t seed) {
  for (const ParamRange* range : {&ranges.kappa, &ranges.theta, &ranges.sigma}) {
    if (!(range->lo > 0.0) || !(range->hi >= range->lo)) {
      throw Error(ErrorCode::InvalidArgument, "parameter ranges must satisfy 0 < lo <= hi");
    }
  }
  Rng rng = make_rng(seed, 3);
  auto draw = [&rng](const ParamRange& range) {
    return std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
  };
  HestonParams p;
  p.kappa = draw(ranges.kappa);
  p.theta = draw(ranges.theta);
  p.sigma = draw(ranges.sigma);
  p.rho = rho;
  p.r = r;
  p.dt = dt;
  require_valid(p);
  return p;
}

}  // namespace hestoncal
