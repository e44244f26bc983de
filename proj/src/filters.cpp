#include "hestoncal/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hestoncal {

namespace {

using SigmaPoints = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim,
                                  2 * kMaxDim + 1>;

void require_finite(const Vector& mean, const Matrix& cov) {
  if (!mean.allFinite() || !cov.allFinite()) throw Error(ErrorCode::NonFinite, "non-finite state");
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_pd(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidCovariance, "invalid covariance");
}

struct UnscentedWeights {
  double c = 0.0;  // n + lambda
  double wm0 = 0.0;
  double wc0 = 0.0;
  double wi = 0.0;
};

UnscentedWeights unscented_weights(int n, const UkfParams& u) {
  UnscentedWeights w;
  const double lambda = u.alpha * u.alpha * (n + u.kappa) - n;
  w.c = n + lambda;
  if (!(w.c > 0.0)) throw Error(ErrorCode::InvalidArgument, "UKF parameters give n + lambda <= 0");
  w.wm0 = lambda / w.c;
  w.wc0 = w.wm0 + (1.0 - u.alpha * u.alpha + u.beta);
  w.wi = 0.5 / w.c;
  return w;
}

// Sigma points are kept inside the admissible set by translating the whole
// set rather than clipping single points. With small alpha the center weight
// is of order -1/alpha^2, so a clipped (asymmetric) set would bias the mean.
SigmaPoints sigma_points(const StateSpaceModel& model, const Vector& m, const Matrix& P, double c) {
  const int n = static_cast<int>(m.size());
  const Matrix L = psd_sqrt(c * P);
  Vector center = model.project(m);
  Vector shift = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Vector lo = center - L.col(i);
    const Vector hi = center + L.col(i);
    shift += (model.project(lo) - lo) + (model.project(hi) - hi);
  }
  center += shift;
  SigmaPoints pts(n, 2 * n + 1);
  pts.col(0) = center;
  for (int i = 0; i < n; ++i) {
    const Vector hi = center + L.col(i);
    const Vector d = hi - center;  // exactly representable, so the pair is symmetric
    pts.col(1 + i) = model.project(hi);
    pts.col(1 + n + i) = model.project(center - d);
  }
  return pts;
}

// Weighted mean written as a correction to the center point, which keeps the
// large-magnitude center weight out of the sum.
Vector unscented_mean(const SigmaPoints& pts, const UnscentedWeights& w) {
  Vector acc = Vector::Zero(pts.rows());
  for (Eigen::Index i = 1; i < pts.cols(); ++i) acc += w.wi * (pts.col(i) - pts.col(0));
  return pts.col(0) + acc;
}

Matrix unscented_cross(const SigmaPoints& a, const Vector& ma, const SigmaPoints& b, const Vector& mb,
                       const UnscentedWeights& w) {
  Matrix out = w.wc0 * (a.col(0) - ma) * (b.col(0) - mb).transpose();
  for (Eigen::Index i = 1; i < a.cols(); ++i) out += w.wi * (a.col(i) - ma) * (b.col(i) - mb).transpose();
  return out;
}

}  // namespace

std::string_view filter_name(FilterKind kind) {
  switch (kind) {
    case FilterKind::Ekf: return "EKF";
    case FilterKind::Ukf: return "UKF";
    case FilterKind::Pf: return "PF";
  }
  return "?";
}

GaussianPrior data_driven_prior(std::span<const double> y, double dt, int window) {
  if (y.size() < 2) throw Error(ErrorCode::InvalidArgument, "prior needs at least two observations");
  if (window < 1) throw Error(ErrorCode::InvalidArgument, "prior window must be >= 1");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), y.size() - 1);
  CompensatedSum ss;
  for (std::size_t k = 1; k <= w; ++k) {
    const double r = y[k] - y[k - 1];
    ss.add(r * r);
  }
  const double mean = std::max(ss.value() / (static_cast<double>(w) * dt), kVarianceFloor);
  if (!std::isfinite(mean)) throw Error(ErrorCode::NonFinite, "non-finite state");
  GaussianPrior prior;
  prior.mean = Vector::Constant(1, mean);
  prior.cov = Matrix::Constant(1, 1, 0.25 * mean * mean);
  return prior;
}

StateEstimate ekf_step(const StateSpaceModel& model, const StateEstimate& prev, const StepInput& in) {
  require_finite(prev.mean, prev.cov);
  const int s = model.state_dim();

  const Vector m_pred = model.transition_mean(prev.mean, in);
  const Matrix F = model.transition_jacobian(prev.mean, in);
  const Matrix Q = model.expected_transition_noise(prev.mean, prev.cov, in);
  const Matrix P_pred = symmetrize(F * prev.cov * F.transpose() + Q);

  const Matrix H = model.measurement_jacobian(m_pred, in);
  const Matrix R = model.expected_measurement_noise(m_pred, P_pred, in);
  const Matrix S = symmetrize(H * P_pred * H.transpose() + R);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateInnovation, "degenerate innovation");

  const Matrix K = llt.solve(H * P_pred).transpose();
  const Vector innovation = in.y - model.measurement_mean(m_pred, in);
  const Matrix I_KH = Matrix::Identity(s, s) - K * H;

  StateEstimate out;
  out.mean = model.project(m_pred + K * innovation);
  out.cov = symmetrize(I_KH * P_pred * I_KH.transpose() + K * R * K.transpose());
  out.filter = FilterKind::Ekf;
  out.t_index = in.t_index;
  require_finite(out.mean, out.cov);
  require_pd(out.cov);
  return out;
}

StateEstimate ukf_step(const StateSpaceModel& model, const StateEstimate& prev, const StepInput& in,
                       const UkfParams& params) {
  require_finite(prev.mean, prev.cov);
  const int s = model.state_dim();
  const UnscentedWeights w = unscented_weights(s, params);

  const SigmaPoints chi = sigma_points(model, prev.mean, prev.cov, w.c);
  SigmaPoints fx(s, chi.cols());
  // Projecting single points would put a kink under the large center weight.
  for (Eigen::Index i = 0; i < chi.cols(); ++i) fx.col(i) = model.transition_mean_unprojected(chi.col(i), in);
  const Vector fx_mean = unscented_mean(fx, w);
  const Matrix Q = model.expected_transition_noise(prev.mean, prev.cov, in);
  const Matrix P_pred = symmetrize(unscented_cross(fx, fx_mean, fx, fx_mean, w) + Q);
  const Vector m_pred = model.project(fx_mean);
  require_pd(P_pred);

  const SigmaPoints xi = sigma_points(model, m_pred, P_pred, w.c);
  SigmaPoints gz(model.obs_dim(), xi.cols());
  for (Eigen::Index i = 0; i < xi.cols(); ++i) gz.col(i) = model.measurement_mean(xi.col(i), in);
  const Vector y_hat = unscented_mean(gz, w);
  const Matrix R = model.expected_measurement_noise(m_pred, P_pred, in);
  const Matrix S = symmetrize(unscented_cross(gz, y_hat, gz, y_hat, w) + R);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::DegenerateInnovation, "degenerate innovation");
  const Matrix Pxz = unscented_cross(xi, m_pred, gz, y_hat, w);
  const Matrix K = llt.solve(Pxz.transpose()).transpose();

  StateEstimate out;
  out.mean = model.project(m_pred + K * (in.y - y_hat));
  out.cov = symmetrize(P_pred - K * S * K.transpose());
  out.filter = FilterKind::Ukf;
  out.t_index = in.t_index;
  require_finite(out.mean, out.cov);
  require_pd(out.cov);
  return out;
}

ParticleCloud sample_prior(const StateSpaceModel& model, const GaussianPrior& prior, int n, Rng& rng) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "particle count must be >= 2");
  const int s = model.state_dim();
  if (prior.mean.size() != s || prior.cov.rows() != s || prior.cov.cols() != s) {
    throw Error(ErrorCode::InvalidArgument, "prior dimension does not match the model");
  }
  const Matrix L = psd_sqrt(prior.cov);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParticleCloud cloud;
  cloud.particles.resize(s, n);
  Vector z(s);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < s; ++j) z(j) = normal(rng);
    cloud.particles.col(i) = model.project(prior.mean + L * z);
  }
  cloud.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  cloud.ess = n;
  return cloud;
}

double effective_sample_size(const Eigen::VectorXd& weights) { return 1.0 / weights.squaredNorm(); }

std::vector<int> systematic_resample(const Eigen::VectorXd& weights, Rng& rng) {
  const Eigen::Index n = weights.size();
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u0 = unif(rng) / static_cast<double>(n);
  double cum = weights(0);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (u > cum && j < n - 1) cum += weights(++j);
    idx[static_cast<std::size_t>(i)] = static_cast<int>(j);
  }
  return idx;
}

PfStepResult pf_step(const StateSpaceModel& model, const ParticleCloud& prev, const StepInput& in,
                     Rng& rng, const PfOptions& options) {
  const Eigen::Index n = prev.particles.cols();
  if (n < 1 || prev.weights.size() != n) throw Error(ErrorCode::InvalidArgument, "malformed particle cloud");

  PfStepResult out;
  model.propagate(prev.particles, out.predicted, in, rng);
  Eigen::VectorXd loglik;
  model.log_likelihood(out.predicted, in, loglik);

  Eigen::VectorXd logw = prev.weights.array().log().matrix() + loglik;
  double max_logw = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(logw(i))) throw Error(ErrorCode::ParticleDegeneracy, "particle degeneracy");
    max_logw = std::max(max_logw, logw(i));
  }
  if (!std::isfinite(max_logw)) throw Error(ErrorCode::ParticleDegeneracy, "particle degeneracy");
  out.posterior_weights = (logw.array() - max_logw).exp().matrix();
  out.posterior_weights /= out.posterior_weights.sum();

  const int s = model.state_dim();
  const Eigen::VectorXd mean = out.predicted * out.posterior_weights;
  const Eigen::MatrixXd centered = out.predicted.colwise() - mean;
  Eigen::MatrixXd cov = centered * out.posterior_weights.asDiagonal() * centered.transpose();
  for (int j = 0; j < s; ++j) cov(j, j) = std::max(cov(j, j), kParticleCovJitter);
  out.estimate.mean = mean;
  out.estimate.cov = symmetrize(cov);
  out.estimate.filter = FilterKind::Pf;
  out.estimate.t_index = in.t_index;
  require_finite(out.estimate.mean, out.estimate.cov);

  const double ess = effective_sample_size(out.posterior_weights);
  if (ess < options.resample_threshold * static_cast<double>(n)) {
    const std::vector<int> idx = systematic_resample(out.posterior_weights, rng);
    out.cloud.particles.resize(s, n);
    for (Eigen::Index i = 0; i < n; ++i) out.cloud.particles.col(i) = out.predicted.col(idx[static_cast<std::size_t>(i)]);
    out.cloud.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    out.cloud.ess = static_cast<double>(n);
    out.resampled = true;
  } else {
    out.cloud.particles = out.predicted;
    out.cloud.weights = out.posterior_weights;
    out.cloud.ess = ess;
  }
  return out;
}

void ExtendedKalmanFilter::reset(const StateSpaceModel&, const GaussianPrior& prior) {
  state_ = StateEstimate{prior.mean, prior.cov, FilterKind::Ekf, 0};
}

const StateEstimate& ExtendedKalmanFilter::step(const StateSpaceModel& model, const StepInput& in) {
  state_ = ekf_step(model, state_, in);
  return state_;
}

void UnscentedKalmanFilter::reset(const StateSpaceModel&, const GaussianPrior& prior) {
  state_ = StateEstimate{prior.mean, prior.cov, FilterKind::Ukf, 0};
}

const StateEstimate& UnscentedKalmanFilter::step(const StateSpaceModel& model, const StepInput& in) {
  state_ = ukf_step(model, state_, in, params_);
  return state_;
}

ParticleFilter::ParticleFilter(PfOptions options, std::uint64_t seed, std::uint64_t stream)
    : options_(options), rng_(make_rng(seed, stream)) {
  if (options_.particles < 2) throw Error(ErrorCode::InvalidArgument, "particle count must be >= 2");
}

void ParticleFilter::reset(const StateSpaceModel& model, const GaussianPrior& prior) {
  prior_ = prior;
  previous_ = sample_prior(model, prior_, options_.particles, rng_);
  last_ = PfStepResult{};
  last_.cloud = previous_;
  last_.estimate = StateEstimate{prior.mean, prior.cov, FilterKind::Pf, 0};
  restarts_ = 0;
}

const StateEstimate& ParticleFilter::step(const StateSpaceModel& model, const StepInput& in) {
  previous_ = std::move(last_.cloud);
  try {
    last_ = pf_step(model, previous_, in, rng_, options_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParticleDegeneracy) throw;
    ++restarts_;
    log_message(LogLevel::Warning,
                "particle degeneracy at step " + std::to_string(in.t_index) + "; restarting from prior");
    previous_ = sample_prior(model, prior_, options_.particles, rng_);
    last_ = pf_step(model, previous_, in, rng_, options_);
  }
  return last_.estimate;
}

std::unique_ptr<Filter> make_filter(FilterKind kind, const FilterOptions& options) {
  switch (kind) {
    case FilterKind::Ekf: return std::make_unique<ExtendedKalmanFilter>();
    case FilterKind::Ukf: return std::make_unique<UnscentedKalmanFilter>(options.ukf);
    case FilterKind::Pf: return std::make_unique<ParticleFilter>(options.pf, options.seed);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown filter kind");
}

FilterBankResult run_filter_bank(const StateSpaceModel& model, const ObservationSeries& obs,
                                 const GaussianPrior& prior, const FilterOptions& options,
                                 const std::vector<FilterKind>& bank) {
  if (obs.size() < 2) throw Error(ErrorCode::InvalidArgument, "series needs at least two observations");
  if (bank.empty()) throw Error(ErrorCode::InvalidArgument, "filter bank is empty");
  FilterBankResult result;
  result.kinds = bank;
  for (FilterKind kind : bank) {
    auto filter = make_filter(kind, options);
    filter->reset(model, prior);
    std::vector<StateEstimate> track;
    track.reserve(obs.size() - 1);
    for (std::size_t k = 1; k < obs.size(); ++k) {
      try {
        track.push_back(filter->step(model, step_input(obs, k)));
      } catch (const Error& e) {
        throw Error(e.code(), std::string(filter_name(kind)) + " step " + std::to_string(k) + ": " + e.what());
      }
    }
    result.estimates.push_back(std::move(track));
  }
  return result;
}

FilterBankResult run_filter_bank(std::span<const double> y, const HestonParams& params,
                                 const FilterOptions& options, const std::vector<FilterKind>& bank,
                                 int prior_window) {
  const HestonStateSpace model(params);
  return run_filter_bank(model, scalar_observations(y), data_driven_prior(y, params.dt, prior_window),
                         options, bank);
}

}  // namespace hestoncal
