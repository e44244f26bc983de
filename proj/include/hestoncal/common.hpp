#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace hestoncal {

// State and observation dimensions are small; fixed capacity keeps the hot
// filter loops free of heap allocation.
inline constexpr int kMaxDim = 4;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using Rng = std::mt19937_64;

/// Lower bound applied to every variance state after transitions and updates.
inline constexpr double kVarianceFloor = 1e-8;

enum class ErrorCode {
  InvalidArgument = 1,
  InvalidParams,
  NonFinite,
  DegenerateInnovation,
  ParticleDegeneracy,
  DegenerateNoise,
  SingularMatrix,
  InvalidCovariance,
  DegenerateSeries,
  Io,
  Parse,
  Config,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class LogLevel { Debug = 0, Info = 1, Warning = 2, Error = 3 };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Installs a process-wide sink; pass an empty function to silence logging.
void set_log_sink(LogSink sink);
void log_message(LogLevel level, std::string_view message);

/// Neumaier-compensated accumulator. Sums over long series must not depend on
/// reduction order beyond ~1e-12 relative.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Deterministic RNG for a (seed, stream) pair so independent consumers of one
/// user seed never share a sequence.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace hestoncal
