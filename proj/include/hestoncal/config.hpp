#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hestoncal/calibration.hpp"
#include "hestoncal/heston.hpp"

namespace hestoncal {

struct SimulateSettings {
  int steps = 1000;
  double v0 = 0.0;  // 0 means theta
  double s0 = 100.0;
  std::string start_date = "2020-01-01";
};

struct ReportSettings {
  int hist_window = 30;
  double vix_scale = 100.0;
};

/// Every tunable of the pipeline. Defaults live here.
struct RunConfig {
  HestonParams model{10.8, 0.23, 1.78, 0.8, 0.02, 1.0 / 252.0};
  SimulateSettings simulate;
  CalibrationConfig calibration;
  bool init_from_ranges = true;  // otherwise [model] is the initial guess
  ParamRanges ranges;
  ReportSettings report;
  std::uint64_t seed = 42;
  std::string out_dir = "out";
};

/// One diagnostic per offending field, "section.key: message".
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> fields);
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

RunConfig default_config();

/// Reads an INI file over the defaults. Unknown sections or keys are errors.
RunConfig load_config(const std::string& path);

/// Applies "section.key" = value. Throws ConfigError for unknown keys or bad
/// values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Canonical text of one value. Throws ConfigError for unknown keys.
std::string get_config_value(const RunConfig& config, const std::string& key);

/// Cross-field checks; throws ConfigError listing every problem.
void validate_config(const RunConfig& config);

/// Canonical "section.key=value" lines in schema order.
std::string canonical_config(const RunConfig& config);

/// 16 hex digits of FNV-1a over the canonical form.
std::string config_hash(const RunConfig& config);

/// Known keys in schema order.
std::vector<std::string> config_keys();

}  // namespace hestoncal
