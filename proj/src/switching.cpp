#include "hestoncal/switching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hestoncal {

namespace {

constexpr double kClampTolerance = 1e-9;

}  // namespace

PerformanceMetric performance_metric(const Matrix& j_inv, const Matrix& p_cov, FilterKind filter,
                                     int t_index) {
  const Eigen::Index s = j_inv.rows();
  if (s < 1 || j_inv.cols() != s || p_cov.rows() != s || p_cov.cols() != s) {
    throw Error(ErrorCode::InvalidArgument, "metric matrices must be square and of equal size");
  }
  PerformanceMetric m;
  m.filter = filter;
  m.t_index = t_index;
  m.phi = Matrix::Zero(s, s);
  for (Eigen::Index j = 0; j < s; ++j) {
    const double bound = j_inv(j, j);
    const double mse = p_cov(j, j);
    if (!(bound > 0.0) || !(mse > 0.0) || !std::isfinite(bound) || !std::isfinite(mse)) {
      throw Error(ErrorCode::InvalidCovariance, "invalid covariance");
    }
    double phi = bound / mse;
    if (phi > 1.0 - kClampTolerance) {
      if (phi > 1.0 + kClampTolerance) {
        ++m.clamped;
        log_message(LogLevel::Warning, std::string(filter_name(filter)) + " phi " + std::to_string(phi) +
                                           " clamped to 1 at step " + std::to_string(t_index));
      }
      phi = 1.0;
    }
    m.phi(j, j) = phi;
  }
  m.trace = m.phi.trace();
  return m;
}

SwitchDecision select(std::span<const PerformanceMetric> metrics, std::span<const StateEstimate> estimates) {
  if (metrics.empty()) throw Error(ErrorCode::InvalidArgument, "empty filter set");
  if (metrics.size() != estimates.size()) {
    throw Error(ErrorCode::InvalidArgument, "metrics and estimates differ in length");
  }
  SwitchDecision d;
  d.traces.fill(std::numeric_limits<double>::quiet_NaN());
  d.t_index = metrics.front().t_index;
  std::size_t best = 0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const PerformanceMetric& m = metrics[i];
    if (m.t_index != d.t_index) throw Error(ErrorCode::InvalidArgument, "metrics from different steps");
    d.traces[static_cast<std::size_t>(m.filter)] = m.trace;
    const PerformanceMetric& b = metrics[best];
    if (m.trace > b.trace || (m.trace == b.trace && m.filter < b.filter)) best = i;
  }
  d.chosen = metrics[best].filter;
  d.estimate = estimates[best];
  return d;
}

SwitchingPipeline::SwitchingPipeline(SwitchingConfig config)
    : config_(std::move(config)), tracker_(PcrlbOptions{config_.pf, config_.fisher}, config_.seed) {
  if (config_.bank.empty()) throw Error(ErrorCode::InvalidArgument, "filter bank is empty");
  const FilterOptions options{config_.pf, config_.ukf, config_.seed};
  for (FilterKind kind : config_.bank) filters_.push_back(make_filter(kind, options));
}

void SwitchingPipeline::reset(const StateSpaceModel& model, const GaussianPrior& prior) {
  for (auto& f : filters_) f->reset(model, prior);
  tracker_.reset(model, prior);
  last_ = SwitchStep{};
  clamp_events_ = 0;
  metric_evaluations_ = 0;
}

const SwitchStep& SwitchingPipeline::step(const StateSpaceModel& model, const StepInput& in) {
  last_.estimates.clear();
  last_.metrics.clear();
  for (auto& f : filters_) {
    try {
      last_.estimates.push_back(f->step(model, in));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(filter_name(f->kind())) + " step " + std::to_string(in.t_index) +
                                ": " + e.what());
    }
  }
  last_.pfim = tracker_.step(model, in);
  for (const StateEstimate& est : last_.estimates) {
    last_.metrics.push_back(performance_metric(last_.pfim.j_inv, est.cov, est.filter, in.t_index));
    clamp_events_ += last_.metrics.back().clamped;
    metric_evaluations_ += static_cast<long>(est.cov.rows());
  }
  last_.decision = select(last_.metrics, last_.estimates);
  return last_;
}

void SwitchingRun::append(const SwitchStep& step) {
  if (members.empty()) {
    members.resize(step.estimates.size());
    metrics.resize(step.metrics.size());
  }
  decisions.push_back(step.decision);
  for (std::size_t i = 0; i < step.estimates.size(); ++i) {
    members[i].push_back(step.estimates[i]);
    metrics[i].push_back(step.metrics[i]);
    clamp_events += step.metrics[i].clamped;
    metric_evaluations += static_cast<long>(step.metrics[i].phi.rows());
  }
  pcrlb.push_back(pcrlb_trace(step.pfim));
  inverse_mismatch.push_back(hestoncal::inverse_mismatch(step.pfim));
  const double v = step.decision.estimate.mean(0);
  variance.push_back(v);
  volatility.push_back(std::sqrt(std::max(v, 0.0)));
}

SwitchingRun run_switching_pipeline(const StateSpaceModel& model, const ObservationSeries& obs,
                                    const GaussianPrior& prior, const SwitchingConfig& config) {
  if (obs.size() < 2) throw Error(ErrorCode::InvalidArgument, "series needs at least two observations");
  SwitchingPipeline pipeline(config);
  pipeline.reset(model, prior);
  SwitchingRun run;
  run.bank = config.bank;
  run.decisions.reserve(obs.size() - 1);
  for (std::size_t k = 1; k < obs.size(); ++k) run.append(pipeline.step(model, step_input(obs, k)));
  return run;
}

SwitchingRun run_switching_pipeline(std::span<const double> y, const HestonParams& params,
                                    const SwitchingConfig& config) {
  const HestonStateSpace model(params);
  return run_switching_pipeline(model, scalar_observations(y),
                                data_driven_prior(y, params.dt, config.prior_window), config);
}

}  // namespace hestoncal
