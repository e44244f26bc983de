#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "hestoncal/common.hpp"
#include "hestoncal/filters.hpp"
#include "hestoncal/state_space.hpp"

namespace hestoncal {

struct DTerms {
  Matrix d11;
  Matrix d12;
  Matrix d22;
};

/// Additive: expectations of the mean-Jacobian terms only, exact for
/// state-independent noise. Full: adds 0.5*tr(N^-1 dN/dx_i N^-1 dN/dx_j) for the
/// state-dependent transition and measurement covariances.
enum class FisherForm { Additive, Full };

/// Weighted particle approximations for one measurement sequence. Empty
/// weight vectors mean uniform weights.
struct DTermClouds {
  const Eigen::MatrixXd& smoothed;  // x_t drawn from p(x_t | y_{1:t+1})
  const Eigen::VectorXd& smoothed_weights;
  const Eigen::MatrixXd& predicted;  // x_{t+1} drawn from p(x_{t+1} | y_{1:t})
  const Eigen::VectorXd& predicted_weights;
};

/// D-terms averaged over the M supplied sequences.
DTerms approx_d_terms(const StateSpaceModel& model, std::span<const DTermClouds> sequences,
                      const StepInput& in, FisherForm form = FisherForm::Full);

DTerms approx_d_terms(const StateSpaceModel& model, const DTermClouds& clouds, const StepInput& in,
                      FisherForm form = FisherForm::Full);

struct PfimState {
  Matrix j;
  Matrix j_inv;        // direct inverse of j
  Matrix j_inv_lemma;  // matrix-inversion-lemma form
  int t_index = 0;
  DTerms d;
};

/// Gaussian prior information: J_0 = cov^-1.
PfimState j0(const Vector& prior_mean, const Matrix& prior_cov);

/// J_0 as the sample mean of score * score^T, score = grad log p(x), over
/// column-stored samples.
PfimState j0_monte_carlo(const Eigen::MatrixXd& samples,
                         const std::function<Vector(const Vector&)>& score);

/// J_{t+1} = D22 - D12^T (J_t + D11)^-1 D12, with both inverse forms.
PfimState pfim_update(const PfimState& prev, const DTerms& d);

double pcrlb_trace(const PfimState& state);

/// Largest elementwise gap between the two inverse forms.
double inverse_mismatch(const PfimState& state);

struct PcrlbOptions {
  PfOptions pf;
  FisherForm form = FisherForm::Full;
};

/// Online PCRLB along one observation sequence. Runs its own particle filter
/// to supply the smoothed and predicted clouds.
class PcrlbTracker {
 public:
  PcrlbTracker(PcrlbOptions options, std::uint64_t seed, std::uint64_t stream = 2);

  void reset(const StateSpaceModel& model, const GaussianPrior& prior);
  const PfimState& step(const StateSpaceModel& model, const StepInput& in);

  const PfimState& state() const { return state_; }
  const ParticleFilter& particle_filter() const { return pf_; }

 private:
  PcrlbOptions options_;
  ParticleFilter pf_;
  PfimState state_;
};

}  // namespace hestoncal
