#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hestoncal/filters.hpp"
#include "hestoncal/pcrlb.hpp"

namespace hestoncal {

struct PerformanceMetric {
  Matrix phi;  // diagonal
  double trace = 0.0;
  FilterKind filter = FilterKind::Ekf;
  int t_index = 0;
  int clamped = 0;  // diagonal entries clamped to 1
};

/// phi(j,j) = j_inv(j,j) / p_cov(j,j), clamped to 1. Ratios within 1e-9 of 1
/// on either side are set to exactly 1 and are not counted as clamps.
PerformanceMetric performance_metric(const Matrix& j_inv, const Matrix& p_cov, FilterKind filter,
                                     int t_index = 0);

struct SwitchDecision {
  FilterKind chosen = FilterKind::Ekf;
  // Indexed by FilterKind; NaN for filters absent from the bank.
  std::array<double, kFilterKinds> traces{};
  StateEstimate estimate;
  int t_index = 0;
};

/// Argmax of trace; ties go to the lowest FilterKind. `estimates` is parallel
/// to `metrics`.
SwitchDecision select(std::span<const PerformanceMetric> metrics, std::span<const StateEstimate> estimates);

struct SwitchingConfig {
  std::vector<FilterKind> bank = kDefaultBank;
  PfOptions pf;
  UkfParams ukf;
  FisherForm fisher = FisherForm::Full;
  std::uint64_t seed = 0;
  int prior_window = 30;
};

struct SwitchStep {
  SwitchDecision decision;
  std::vector<PerformanceMetric> metrics;  // parallel to the bank
  std::vector<StateEstimate> estimates;    // parallel to the bank
  PfimState pfim;
};

/// Filter bank plus PCRLB tracker advanced in lockstep. Bank members never see
/// the chosen estimate.
class SwitchingPipeline {
 public:
  explicit SwitchingPipeline(SwitchingConfig config);

  void reset(const StateSpaceModel& model, const GaussianPrior& prior);
  const SwitchStep& step(const StateSpaceModel& model, const StepInput& in);

  const SwitchingConfig& config() const { return config_; }
  const SwitchStep& last() const { return last_; }
  long clamp_events() const { return clamp_events_; }
  long metric_evaluations() const { return metric_evaluations_; }

 private:
  SwitchingConfig config_;
  std::vector<std::unique_ptr<Filter>> filters_;
  PcrlbTracker tracker_;
  SwitchStep last_;
  long clamp_events_ = 0;
  long metric_evaluations_ = 0;
};

struct SwitchingRun {
  std::vector<FilterKind> bank;
  std::vector<SwitchDecision> decisions;  // one per step 1..n-1
  std::vector<std::vector<StateEstimate>> members;  // members[i][k], bank order
  std::vector<std::vector<PerformanceMetric>> metrics;
  std::vector<double> pcrlb;  // Tr[J^-1] per step
  std::vector<double> inverse_mismatch;
  std::vector<double> variance;    // chosen estimate, first state component
  std::vector<double> volatility;  // sqrt(variance)
  long clamp_events = 0;
  long metric_evaluations = 0;

  double clamp_rate() const {
    return metric_evaluations == 0 ? 0.0 : static_cast<double>(clamp_events) / static_cast<double>(metric_evaluations);
  }
  void append(const SwitchStep& step);
};

SwitchingRun run_switching_pipeline(const StateSpaceModel& model, const ObservationSeries& obs,
                                    const GaussianPrior& prior, const SwitchingConfig& config);

/// Heston convenience over log price ratios with the data-driven prior.
SwitchingRun run_switching_pipeline(std::span<const double> y, const HestonParams& params,
                                    const SwitchingConfig& config);

}  // namespace hestoncal
