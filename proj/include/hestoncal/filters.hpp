#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hestoncal/common.hpp"
#include "hestoncal/heston.hpp"
#include "hestoncal/state_space.hpp"

namespace hestoncal {

// The numeric values double as the fixed tie-break priority used by switching.
enum class FilterKind { Ekf = 0, Ukf = 1, Pf = 2 };

inline constexpr int kFilterKinds = 3;

std::string_view filter_name(FilterKind kind);

struct StateEstimate {
  Vector mean;
  Matrix cov;
  FilterKind filter = FilterKind::Ekf;
  int t_index = 0;
};

struct GaussianPrior {
  Vector mean;
  Matrix cov;
};

/// Realized-variance prior from the first `window` log returns of y:
/// mean = sum(r^2) / (window * dt), variance = (mean / 2)^2.
GaussianPrior data_driven_prior(std::span<const double> y, double dt, int window = 30);

StateEstimate ekf_step(const StateSpaceModel& model, const StateEstimate& prev, const StepInput& in);

struct UkfParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
};

StateEstimate ukf_step(const StateSpaceModel& model, const StateEstimate& prev, const StepInput& in,
                       const UkfParams& params = {});

struct ParticleCloud {
  Eigen::MatrixXd particles;  // state_dim x N
  Eigen::VectorXd weights;    // sums to 1
  double ess = 0.0;
};

ParticleCloud sample_prior(const StateSpaceModel& model, const GaussianPrior& prior, int n, Rng& rng);

double effective_sample_size(const Eigen::VectorXd& weights);

/// Systematic resampling; returns the ancestor index of each offspring.
std::vector<int> systematic_resample(const Eigen::VectorXd& weights, Rng& rng);

struct PfOptions {
  int particles = 1000;
  double resample_threshold = 0.5;  // resample when ess < threshold * N
};

struct PfStepResult {
  ParticleCloud cloud;  // after optional resampling
  StateEstimate estimate;
  Eigen::MatrixXd predicted;          // propagated particles before resampling
  Eigen::VectorXd posterior_weights;  // their normalized weights
  bool resampled = false;
};

/// Bootstrap step: propagate through the transition, weight by the measurement
/// likelihood, estimate, then resample when the ess falls below threshold.
PfStepResult pf_step(const StateSpaceModel& model, const ParticleCloud& prev, const StepInput& in,
                     Rng& rng, const PfOptions& options = {});

/// Minimum diagonal entry of a particle covariance.
inline constexpr double kParticleCovJitter = 1e-10;

class Filter {
 public:
  virtual ~Filter() = default;

  virtual FilterKind kind() const = 0;
  virtual void reset(const StateSpaceModel& model, const GaussianPrior& prior) = 0;
  virtual const StateEstimate& step(const StateSpaceModel& model, const StepInput& in) = 0;
  virtual const StateEstimate& estimate() const = 0;
};

class ExtendedKalmanFilter final : public Filter {
 public:
  FilterKind kind() const override { return FilterKind::Ekf; }
  void reset(const StateSpaceModel& model, const GaussianPrior& prior) override;
  const StateEstimate& step(const StateSpaceModel& model, const StepInput& in) override;
  const StateEstimate& estimate() const override { return state_; }

 private:
  StateEstimate state_;
};

class UnscentedKalmanFilter final : public Filter {
 public:
  explicit UnscentedKalmanFilter(UkfParams params = {}) : params_(params) {}

  FilterKind kind() const override { return FilterKind::Ukf; }
  void reset(const StateSpaceModel& model, const GaussianPrior& prior) override;
  const StateEstimate& step(const StateSpaceModel& model, const StepInput& in) override;
  const StateEstimate& estimate() const override { return state_; }

 private:
  UkfParams params_;
  StateEstimate state_;
};

/// Bootstrap particle filter. On total weight collapse the cloud is redrawn
/// from the prior and the step retried once.
class ParticleFilter final : public Filter {
 public:
  ParticleFilter(PfOptions options, std::uint64_t seed, std::uint64_t stream = 1);

  FilterKind kind() const override { return FilterKind::Pf; }
  void reset(const StateSpaceModel& model, const GaussianPrior& prior) override;
  const StateEstimate& step(const StateSpaceModel& model, const StepInput& in) override;
  const StateEstimate& estimate() const override { return last_.estimate; }

  /// Cloud entering the most recent step, and that step's result.
  const ParticleCloud& previous_cloud() const { return previous_; }
  const PfStepResult& last_step() const { return last_; }
  const ParticleCloud& cloud() const { return last_.cloud; }
  int restarts() const { return restarts_; }

 private:
  PfOptions options_;
  Rng rng_;
  GaussianPrior prior_;
  ParticleCloud previous_;
  PfStepResult last_;
  int restarts_ = 0;
};

struct FilterOptions {
  PfOptions pf;
  UkfParams ukf;
  std::uint64_t seed = 0;
};

std::unique_ptr<Filter> make_filter(FilterKind kind, const FilterOptions& options);

struct FilterBankResult {
  std::vector<FilterKind> kinds;
  // estimates[i][k] is filter kinds[i] after step k + 1.
  std::vector<std::vector<StateEstimate>> estimates;
};

inline const std::vector<FilterKind> kDefaultBank = {FilterKind::Ekf, FilterKind::Ukf, FilterKind::Pf};

/// Runs every filter over the series from the same prior. Step errors are
/// rethrown with the filter name and step index.
FilterBankResult run_filter_bank(const StateSpaceModel& model, const ObservationSeries& obs,
                                 const GaussianPrior& prior, const FilterOptions& options,
                                 const std::vector<FilterKind>& bank = kDefaultBank);

/// Heston convenience: y are log price ratios, the prior is data driven.
FilterBankResult run_filter_bank(std::span<const double> y, const HestonParams& params,
                                 const FilterOptions& options,
                                 const std::vector<FilterKind>& bank = kDefaultBank,
                                 int prior_window = 30);

}  // namespace hestoncal
