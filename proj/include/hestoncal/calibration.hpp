#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hestoncal/heston.hpp"
#include "hestoncal/nmle.hpp"
#include "hestoncal/switching.hpp"

namespace hestoncal {

struct CalibrationConfig {
  int warmup = 100;          // steps run under the initial parameters
  int refit_interval = 20;   // 0 disables refitting
  bool fix_rho = true;       // otherwise rho is re-estimated at each refit
  int nmle_window = 0;       // trailing track length used by NMLE; 0 = all
  SwitchingConfig switching;
};

struct TrajectoryRow {
  int step = 0;
  HestonParams params;  // parameters in force after this row
  bool accepted = true;
  NmleEstimate estimate;  // raw fit (empty for row 0)
};

struct CalibrationResult {
  std::vector<TrajectoryRow> trajectory;  // row 0 holds the initial parameters
  SwitchingRun run;
  HestonParams final_params;
  int refits = 0;
  int accepted_refits = 0;
};

/// Alternates one switching-pipeline step under the current parameters with
/// periodic NMLE refits on the chosen variance track. Rejected refits keep
/// the previous parameters.
CalibrationResult calibrate(std::span<const double> y, const HestonParams& init, const CalibrationConfig& config);

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct ParamRanges {
  ParamRange kappa{1.0, 15.0};
  ParamRange theta{0.01, 0.5};
  ParamRange sigma{0.1, 3.0};
};

/// Uniform draw of (kappa, theta, sigma) from the ranges.
HestonParams draw_initial_params(const ParamRanges& ranges, double rho, double r, double dt, std::uint64_t seed);

}  // namespace hestoncal
