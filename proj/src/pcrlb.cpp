#include "hestoncal/pcrlb.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace hestoncal {

namespace {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix inverse_noise(const Matrix& n) {
  Eigen::LLT<Matrix> llt(n);
  if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
    throw Error(ErrorCode::DegenerateNoise, "degenerate noise");
  }
  return llt.solve(Matrix::Identity(n.rows(), n.cols()));
}

Matrix spd_inverse(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::SingularMatrix, what);
  return llt.solve(Matrix::Identity(m.rows(), m.cols()));
}

Matrix general_inverse(const Matrix& m, const char* what) {
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularMatrix, what);
  return lu.inverse();
}

// 0.5 * tr(N^-1 dN_i N^-1 dN_j) for every (i, j).
Matrix heteroscedastic_information(const Matrix& n_inv, const std::vector<Matrix>& dn) {
  const int s = static_cast<int>(dn.size());
  Matrix out(s, s);
  for (int i = 0; i < s; ++i) {
    const Matrix a = n_inv * dn[static_cast<std::size_t>(i)];
    for (int j = i; j < s; ++j) {
      const double v = 0.5 * (a * n_inv * dn[static_cast<std::size_t>(j)]).trace();
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double weight_at(const Eigen::VectorXd& w, Eigen::Index i, Eigen::Index n) {
  return w.size() == 0 ? 1.0 / static_cast<double>(n) : w(i);
}

}  // namespace

DTerms approx_d_terms(const StateSpaceModel& model, std::span<const DTermClouds> sequences,
                      const StepInput& in, FisherForm form) {
  if (sequences.empty()) throw Error(ErrorCode::InvalidArgument, "no particle sequences for D-terms");
  const int s = model.state_dim();
  DTerms out{Matrix::Zero(s, s), Matrix::Zero(s, s), Matrix::Zero(s, s)};
  std::vector<Matrix> dn(static_cast<std::size_t>(s));
  Vector x(s);

  for (const DTermClouds& c : sequences) {
    const Eigen::Index ns = c.smoothed.cols();
    const Eigen::Index np = c.predicted.cols();
    if (ns < 1 || np < 1) throw Error(ErrorCode::InvalidArgument, "D-terms need at least one particle");
    if ((c.smoothed_weights.size() != 0 && c.smoothed_weights.size() != ns) ||
        (c.predicted_weights.size() != 0 && c.predicted_weights.size() != np)) {
      throw Error(ErrorCode::InvalidArgument, "particle weights do not match the cloud");
    }

    for (Eigen::Index i = 0; i < ns; ++i) {
      const double w = weight_at(c.smoothed_weights, i, ns);
      if (w == 0.0) continue;
      x = c.smoothed.col(i);
      const Matrix F = model.transition_jacobian(x, in);
      const Matrix Q_inv = inverse_noise(model.transition_noise(x, in));
      const Matrix FtQi = F.transpose() * Q_inv;
      out.d11 += w * FtQi * F;
      out.d12 -= w * FtQi;
      out.d22 += w * Q_inv;
      if (form == FisherForm::Full) {
        for (int j = 0; j < s; ++j) dn[static_cast<std::size_t>(j)] = model.transition_noise_derivative(x, in, j);
        out.d11 += w * heteroscedastic_information(Q_inv, dn);
      }
    }

    for (Eigen::Index i = 0; i < np; ++i) {
      const double w = weight_at(c.predicted_weights, i, np);
      if (w == 0.0) continue;
      x = c.predicted.col(i);
      const Matrix H = model.measurement_jacobian(x, in);
      const Matrix R_inv = inverse_noise(model.measurement_noise(x, in));
      out.d22 += w * H.transpose() * R_inv * H;
      if (form == FisherForm::Full) {
        for (int j = 0; j < s; ++j) dn[static_cast<std::size_t>(j)] = model.measurement_noise_derivative(x, in, j);
        out.d22 += w * heteroscedastic_information(R_inv, dn);
      }
    }
  }

  const double m = static_cast<double>(sequences.size());
  out.d11 = symmetrize(out.d11 / m);
  out.d12 /= m;
  out.d22 = symmetrize(out.d22 / m);
  return out;
}

DTerms approx_d_terms(const StateSpaceModel& model, const DTermClouds& clouds, const StepInput& in,
                      FisherForm form) {
  return approx_d_terms(model, std::span<const DTermClouds>(&clouds, 1), in, form);
}

PfimState j0(const Vector&, const Matrix& prior_cov) {
  PfimState st;
  st.j = symmetrize(spd_inverse(prior_cov, "singular prior covariance"));
  st.j_inv = prior_cov;
  st.j_inv_lemma = prior_cov;
  return st;
}

PfimState j0_monte_carlo(const Eigen::MatrixXd& samples,
                         const std::function<Vector(const Vector&)>& score) {
  const Eigen::Index n = samples.cols();
  const Eigen::Index s = samples.rows();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "no prior samples");
  Matrix acc = Matrix::Zero(s, s);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector g = score(samples.col(i));
    acc += g * g.transpose();
  }
  PfimState st;
  st.j = symmetrize(acc / static_cast<double>(n));
  st.j_inv = spd_inverse(st.j, "singular prior information");
  st.j_inv_lemma = st.j_inv;
  return st;
}

PfimState pfim_update(const PfimState& prev, const DTerms& d) {
  const Matrix a = symmetrize(prev.j + d.d11);
  const Matrix a_inv = spd_inverse(a, "singular J + D11");

  PfimState next;
  next.t_index = prev.t_index + 1;
  next.d = d;
  next.j = symmetrize(d.d22 - d.d12.transpose() * a_inv * d.d12);
  next.j_inv = symmetrize(spd_inverse(next.j, "PFIM is not positive definite"));

  const Matrix d22_inv = spd_inverse(d.d22, "singular D22");
  const Matrix inner = general_inverse(d.d12 * d22_inv * d.d12.transpose() - a, "singular lemma inner matrix");
  next.j_inv_lemma = symmetrize(d22_inv - d22_inv * d.d12.transpose() * inner * d.d12 * d22_inv);
  return next;
}

double pcrlb_trace(const PfimState& state) { return state.j_inv.trace(); }

double inverse_mismatch(const PfimState& state) {
  return (state.j_inv - state.j_inv_lemma).cwiseAbs().maxCoeff();
}

PcrlbTracker::PcrlbTracker(PcrlbOptions options, std::uint64_t seed, std::uint64_t stream)
    : options_(options), pf_(options.pf, seed, stream) {}

void PcrlbTracker::reset(const StateSpaceModel& model, const GaussianPrior& prior) {
  pf_.reset(model, prior);
  state_ = j0(prior.mean, prior.cov);
}

const PfimState& PcrlbTracker::step(const StateSpaceModel& model, const StepInput& in) {
  pf_.step(model, in);
  const PfStepResult& last = pf_.last_step();
  const ParticleCloud& prev = pf_.previous_cloud();
  // The ancestors at t reweighted by the t+1 likelihood carry the t+1
  // posterior weights.
  const DTermClouds clouds{prev.particles, last.posterior_weights, last.predicted, prev.weights};
  const DTerms d = approx_d_terms(model, clouds, in, options_.form);
  try {
    state_ = pfim_update(state_, d);
  } catch (const Error& e) {
    throw Error(e.code(), "PCRLB step " + std::to_string(in.t_index) + ": " + e.what());
  }
  state_.t_index = in.t_index;
  return state_;
}

}  // namespace hestoncal
