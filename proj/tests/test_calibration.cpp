#include <doctest.h>

#include <cmath>

#include "hestoncal/calibration.hpp"

using namespace hestoncal;

namespace {

HestonParams reference_params() { return HestonParams{10.8, 0.23, 1.78, 0.8, 0.02, 1.0 / 252.0}; }

CalibrationConfig fast_config() {
  CalibrationConfig c;
  c.switching.pf.particles = 200;
  c.switching.seed = 9;
  return c;
}

}  // namespace

TEST_CASE("never refitting reduces to the switching pipeline") {
  const HestonParams p = reference_params();
  const SimulatedPath path = simulate_path(p, p.theta, 100.0, 300, 4);
  CalibrationConfig c = fast_config();
  c.refit_interval = 0;
  const HestonParams init{5.0, 0.1, 1.0, 0.8, 0.02, p.dt};
  const CalibrationResult r = calibrate(path.observations, init, c);
  const SwitchingRun direct = run_switching_pipeline(path.observations, init, c.switching);
  CHECK(r.refits == 0);
  CHECK(r.trajectory.size() == 1);
  CHECK(r.run.variance == direct.variance);
  for (std::size_t t = 0; t < direct.decisions.size(); ++t) CHECK(r.run.decisions[t].chosen == direct.decisions[t].chosen);
  CHECK(r.final_params.kappa == init.kappa);
}

TEST_CASE("alternating loop") {
  const HestonParams p = reference_params();
  const SimulatedPath path = simulate_path(p, p.theta, 100.0, 600, 21);
  const HestonParams init{5.0, 0.1, 1.0, 0.8, 0.02, p.dt};
  const CalibrationConfig c = fast_config();
  const CalibrationResult r = calibrate(path.observations, init, c);

  CHECK(r.run.variance.size() == 600);
  CHECK(r.refits == (600 - 100) / 20 + 1);
  CHECK(r.trajectory.size() == static_cast<std::size_t>(r.refits) + 1);
  CHECK(r.trajectory.front().step == 0);

  HestonParams last = init;
  int accepted = 0;
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    const TrajectoryRow& row = r.trajectory[i];
    CHECK(row.step == 100 + 20 * static_cast<int>(i - 1));
    CHECK(validate_params(row.params).ok());
    CHECK(row.params.rho == init.rho);
    if (row.accepted) {
      ++accepted;
      CHECK(row.params.kappa == row.estimate.kappa_hat);
      CHECK(row.params.theta == row.estimate.theta_hat);
      CHECK(row.params.sigma == row.estimate.sigma_hat);
      CHECK(std::abs(row.estimate.kappa_hat * row.estimate.theta_hat -
                     0.25 * row.estimate.sigma_hat * row.estimate.sigma_hat - row.estimate.p_hat) <
            1e-12 * std::max(1.0, std::abs(row.estimate.p_hat)));
    } else {
      CHECK(row.params.kappa == last.kappa);
      CHECK(row.params.theta == last.theta);
      CHECK(row.params.sigma == last.sigma);
    }
    CHECK(row.estimate.n_used == static_cast<std::size_t>(row.step) - 1);
    last = row.params;
  }
  CHECK(accepted == r.accepted_refits);
  CHECK(r.final_params.kappa == last.kappa);

  SUBCASE("deterministic") {
    const CalibrationResult again = calibrate(path.observations, init, c);
    CHECK(again.run.variance == r.run.variance);
    CHECK(again.final_params.kappa == r.final_params.kappa);
  }

  SUBCASE("the first segment runs under the initial parameters") {
    CalibrationConfig never = c;
    never.refit_interval = 0;
    const CalibrationResult fixed = calibrate(path.observations, init, never);
    for (std::size_t t = 0; t < 100; ++t) CHECK(fixed.run.variance[t] == r.run.variance[t]);
  }
}

TEST_CASE("rho re-estimation and rolling window") {
  const HestonParams p = reference_params();
  const SimulatedPath path = simulate_path(p, p.theta, 100.0, 400, 13);
  const HestonParams init{8.0, 0.2, 1.5, 0.3, 0.02, p.dt};
  CalibrationConfig c = fast_config();
  c.fix_rho = false;
  c.nmle_window = 150;
  const CalibrationResult r = calibrate(path.observations, init, c);
  bool any_estimated = false;
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    const TrajectoryRow& row = r.trajectory[i];
    CHECK(row.estimate.n_used == std::min<std::size_t>(149, static_cast<std::size_t>(row.step) - 1));
    if (row.accepted) {
      any_estimated = true;
      CHECK(row.estimate.rho_estimated);
      CHECK(row.params.rho == row.estimate.rho_hat);
      CHECK(std::abs(row.params.rho) <= 1.0);
    }
  }
  CHECK(any_estimated);
}

TEST_CASE("calibrate rejects bad input") {
  const HestonParams p = reference_params();
  const std::vector<double> short_y(50, 0.0);
  CHECK_THROWS_AS(calibrate(short_y, p, fast_config()), Error);
  const SimulatedPath path = simulate_path(p, p.theta, 100.0, 300, 4);
  HestonParams bad = p;
  bad.sigma = -1;
  CHECK_THROWS_AS(calibrate(path.observations, bad, fast_config()), Error);
  CalibrationConfig c = fast_config();
  c.warmup = 0;
  CHECK_THROWS_AS(calibrate(path.observations, p, c), Error);
  c = fast_config();
  c.nmle_window = 1;
  CHECK_THROWS_AS(calibrate(path.observations, p, c), Error);
}

TEST_CASE("draw_initial_params") {
  const ParamRanges ranges;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const HestonParams d = draw_initial_params(ranges, 0.8, 0.02, 1.0 / 252.0, seed);
    CHECK(d.kappa >= 1.0);
    CHECK(d.kappa <= 15.0);
    CHECK(d.theta >= 0.01);
    CHECK(d.theta <= 0.5);
    CHECK(d.sigma >= 0.1);
    CHECK(d.sigma <= 3.0);
    CHECK(d.rho == 0.8);
  }
  CHECK(draw_initial_params(ranges, 0.8, 0.0, 0.01, 7).kappa == draw_initial_params(ranges, 0.8, 0.0, 0.01, 7).kappa);
  ParamRanges bad;
  bad.theta = ParamRange{0.5, 0.1};
  CHECK_THROWS_AS(draw_initial_params(bad, 0.8, 0.0, 0.01, 1), Error);
  ParamRanges fixed;
  fixed.kappa = ParamRange{3.0, 3.0};
  CHECK(draw_initial_params(fixed, 0.0, 0.0, 0.01, 1).kappa == 3.0);
}
