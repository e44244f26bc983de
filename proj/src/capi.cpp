#include "hestoncal.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "hestoncal/calibration.hpp"
#include "hestoncal/config.hpp"
#include "hestoncal/heston.hpp"
#include "hestoncal/market.hpp"
#include "hestoncal/nmle.hpp"

using namespace hestoncal;

struct hc_config {
  RunConfig value;
  std::string text;
};

struct hc_prices {
  PriceSeries value;
  std::string text;
};

struct hc_path {
  SimulatedPath value;
  hc_prices prices;
};

struct hc_run {
  CalibrationResult value;
};

struct hc_vol_series {
  ReferenceVolSeries value;
  std::string text;
};

struct hc_options {
  std::vector<OptionQuote> value;
};

namespace {

thread_local std::string t_error;
thread_local std::vector<std::string> t_fields;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

hc_status fail(hc_status status, std::string message) {
  t_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
hc_status guard(F&& body) {
  t_error.clear();
  t_fields.clear();
  try {
    body();
    return HC_OK;
  } catch (const ConfigError& e) {
    t_fields = e.fields();
    return fail(HC_CONFIG, e.what());
  } catch (const Error& e) {
    return fail(static_cast<hc_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(HC_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(HC_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

HestonParams to_params(const hc_params& p) { return {p.kappa, p.theta, p.sigma, p.rho, p.r, p.dt}; }

hc_params from_params(const HestonParams& p) { return {p.kappa, p.theta, p.sigma, p.rho, p.r, p.dt}; }

std::vector<std::chrono::sys_days> parse_dates(const char* const* dates, std::size_t n) {
  std::vector<std::chrono::sys_days> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(dates[i] != nullptr, "null date");
    out.push_back(parse_date(dates[i]));
  }
  return out;
}

const char* keep(std::string& slot, std::string value) {
  slot = std::move(value);
  return slot.c_str();
}

hc_status run_calibration(const hc_config* config, const hc_prices* prices, const HestonParams& init,
                          const CalibrationConfig& cal, hc_run** out) {
  return guard([&] {
    require(config && prices && out, "null argument");
    *out = nullptr;
    validate_config(config->value);
    const std::vector<double> y = prices->value.log_ratios();
    auto run = std::make_unique<hc_run>();
    run->value = calibrate(y, init, cal);
    *out = run.release();
  });
}

}  // namespace

extern "C" {

const char* hc_version(void) { return "0.1.0"; }

const char* hc_status_name(hc_status status) {
  switch (status) {
    case HC_OK: return "ok";
    case HC_INVALID_ARGUMENT: return "invalid_argument";
    case HC_INVALID_PARAMS: return "invalid_params";
    case HC_NON_FINITE: return "non_finite";
    case HC_DEGENERATE_INNOVATION: return "degenerate_innovation";
    case HC_PARTICLE_DEGENERACY: return "particle_degeneracy";
    case HC_DEGENERATE_NOISE: return "degenerate_noise";
    case HC_SINGULAR_MATRIX: return "singular_matrix";
    case HC_INVALID_COVARIANCE: return "invalid_covariance";
    case HC_DEGENERATE_SERIES: return "degenerate_series";
    case HC_IO: return "io";
    case HC_PARSE: return "parse";
    case HC_CONFIG: return "config";
    case HC_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hc_filter_name(hc_filter filter) {
  switch (filter) {
    case HC_FILTER_EKF: return "ekf";
    case HC_FILTER_UKF: return "ukf";
    case HC_FILTER_PF: return "pf";
  }
  return "unknown";
}

const char* hc_last_error(void) { return t_error.c_str(); }

size_t hc_last_error_field_count(void) { return t_fields.size(); }

const char* hc_last_error_field(size_t index) { return index < t_fields.size() ? t_fields[index].c_str() : nullptr; }

void hc_set_log_callback(hc_log_fn fn, void* user) {
  if (!fn) {
    set_log_sink({});
    return;
  }
  set_log_sink([fn, user](LogLevel level, std::string_view message) {
    const std::string text(message);
    fn(static_cast<hc_log_level>(level), text.c_str(), user);
  });
}

hc_status hc_validate_params(const hc_params* params) {
  return guard([&] {
    require(params, "null argument");
    require_valid(to_params(*params));
  });
}

hc_status hc_config_default(hc_config** out) {
  return guard([&] {
    require(out, "null argument");
    *out = new hc_config{default_config(), {}};
  });
}

hc_status hc_config_load(const char* path, hc_config** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hc_config{load_config(path), {}};
  });
}

hc_status hc_config_set(hc_config* config, const char* key, const char* value) {
  return guard([&] {
    require(config && key && value, "null argument");
    set_config_value(config->value, key, value);
  });
}

const char* hc_config_get(hc_config* config, const char* key) {
  if (!config || !key) return nullptr;
  try {
    return keep(config->text, get_config_value(config->value, key));
  } catch (const std::exception&) {
    return nullptr;
  }
}

hc_status hc_config_validate(const hc_config* config) {
  return guard([&] {
    require(config, "null argument");
    validate_config(config->value);
  });
}

const char* hc_config_hash(hc_config* config) {
  return config ? keep(config->text, config_hash(config->value)) : nullptr;
}

const char* hc_config_canonical(hc_config* config) {
  return config ? keep(config->text, canonical_config(config->value)) : nullptr;
}

hc_status hc_config_model(const hc_config* config, hc_params* out) {
  return guard([&] {
    require(config && out, "null argument");
    *out = from_params(config->value.model);
  });
}

size_t hc_config_key_count(void) { return config_keys().size(); }

const char* hc_config_key(size_t index) {
  static const std::vector<std::string> keys = config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

void hc_config_free(hc_config* config) { delete config; }

hc_status hc_prices_load(const char* path, hc_prices** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hc_prices{read_price_csv(path), {}};
  });
}

hc_status hc_prices_from_arrays(const char* const* dates, const double* closes, size_t n, hc_prices** out) {
  return guard([&] {
    require(out && (n == 0 || (dates && closes)), "null argument");
    *out = nullptr;
    PriceSeries s;
    s.dates = parse_dates(dates, n);
    s.closes.assign(closes, closes + n);
    validate_prices(s);
    *out = new hc_prices{std::move(s), {}};
  });
}

hc_status hc_prices_save(const hc_prices* prices, const char* path, const char* config_hash) {
  return guard([&] {
    require(prices && path, "null argument");
    write_price_csv(path, prices->value, config_hash ? config_hash : "");
  });
}

size_t hc_prices_size(const hc_prices* prices) { return prices ? prices->value.size() : 0; }

const char* hc_prices_date(hc_prices* prices, size_t index) {
  if (!prices || index >= prices->value.size()) return nullptr;
  return keep(prices->text, format_date(prices->value.dates[index]));
}

double hc_prices_close(const hc_prices* prices, size_t index) {
  if (!prices || index >= prices->value.size()) return kNaN;
  return prices->value.closes[index];
}

hc_status hc_prices_log_ratios(const hc_prices* prices, double* out) {
  return guard([&] {
    require(prices && out, "null argument");
    const std::vector<double> y = prices->value.log_ratios();
    std::copy(y.begin(), y.end(), out);
  });
}

void hc_prices_free(hc_prices* prices) { delete prices; }

hc_status hc_simulate(const hc_config* config, hc_path** out) {
  return guard([&] {
    require(config && out, "null argument");
    *out = nullptr;
    const RunConfig& c = config->value;
    validate_config(c);
    const double v0 = c.simulate.v0 > 0.0 ? c.simulate.v0 : c.model.theta;
    const auto steps = static_cast<std::size_t>(c.simulate.steps);
    auto path = std::make_unique<hc_path>();
    path->value = simulate_path(c.model, v0, c.simulate.s0, steps, c.seed);
    path->prices.value.dates = business_days(parse_date(c.simulate.start_date), steps + 1);
    path->prices.value.closes = path->value.prices;
    *out = path.release();
  });
}

size_t hc_path_size(const hc_path* path) { return path ? path->value.variances.size() : 0; }

double hc_path_variance(const hc_path* path, size_t index) {
  if (!path || index >= path->value.variances.size()) return kNaN;
  return path->value.variances[index];
}

size_t hc_path_floor_hits(const hc_path* path) { return path ? path->value.floor_hits : 0; }

hc_prices* hc_path_prices(hc_path* path) { return path ? &path->prices : nullptr; }

void hc_path_free(hc_path* path) { delete path; }

hc_status hc_run_switching(const hc_config* config, const hc_prices* prices, hc_run** out) {
  if (!config) return guard([] { require(false, "null argument"); });
  CalibrationConfig cal = config->value.calibration;
  cal.refit_interval = 0;
  return run_calibration(config, prices, config->value.model, cal, out);
}

hc_status hc_calibrate(const hc_config* config, const hc_prices* prices, hc_run** out) {
  HestonParams init;
  const hc_status status = guard([&] {
    require(config, "null argument");
    const RunConfig& c = config->value;
    init = c.init_from_ranges ? draw_initial_params(c.ranges, c.model.rho, c.model.r, c.model.dt, c.seed) : c.model;
  });
  if (status != HC_OK) return status;
  return run_calibration(config, prices, init, config->value.calibration, out);
}

hc_status hc_calibrate_from(const hc_config* config, const hc_prices* prices, const hc_params* init,
                            hc_run** out) {
  if (!config || !init) return guard([] { require(false, "null argument"); });
  return run_calibration(config, prices, to_params(*init), config->value.calibration, out);
}

size_t hc_run_track_size(const hc_run* run) { return run ? run->value.run.decisions.size() : 0; }

hc_status hc_run_track_row(const hc_run* run, size_t index, hc_track_row* out) {
  return guard([&] {
    require(run && out, "null argument");
    const SwitchingRun& r = run->value.run;
    require(index < r.decisions.size(), "track index out of range");
    const SwitchDecision& d = r.decisions[index];
    hc_track_row row{};
    row.step = d.t_index;
    row.chosen = static_cast<hc_filter>(d.chosen);
    row.variance = r.variance[index];
    row.volatility = r.volatility[index];
    row.pcrlb_trace = r.pcrlb[index];
    row.inverse_mismatch = r.inverse_mismatch[index];
    for (int j = 0; j < kFilterKinds; ++j) {
      row.phi[j] = d.traces[static_cast<std::size_t>(j)];
      row.member_variance[j] = kNaN;
    }
    for (std::size_t i = 0; i < r.bank.size(); ++i) {
      row.member_variance[static_cast<int>(r.bank[i])] = r.members[i][index].mean(0);
      row.clamped += r.metrics[i][index].clamped;
    }
    *out = row;
  });
}

size_t hc_run_param_rows(const hc_run* run) { return run ? run->value.trajectory.size() : 0; }

hc_status hc_run_param_row(const hc_run* run, size_t index, hc_param_row* out) {
  return guard([&] {
    require(run && out, "null argument");
    require(index < run->value.trajectory.size(), "trajectory index out of range");
    const TrajectoryRow& t = run->value.trajectory[index];
    *out = hc_param_row{t.step,
                        from_params(t.params),
                        t.accepted ? 1 : 0,
                        t.estimate.degenerate ? 1 : 0,
                        t.estimate.kappa_hat,
                        t.estimate.theta_hat,
                        t.estimate.sigma_hat,
                        t.estimate.n_used};
  });
}

hc_status hc_run_final_params(const hc_run* run, hc_params* out) {
  return guard([&] {
    require(run && out, "null argument");
    *out = from_params(run->value.final_params);
  });
}

hc_status hc_run_stats_get(const hc_run* run, hc_run_stats* out) {
  return guard([&] {
    require(run && out, "null argument");
    const SwitchingRun& r = run->value.run;
    hc_run_stats s{};
    s.steps = r.decisions.size();
    s.clamp_events = r.clamp_events;
    s.metric_evaluations = r.metric_evaluations;
    s.clamp_rate = r.clamp_rate();
    for (double m : r.inverse_mismatch) s.max_inverse_mismatch = std::max(s.max_inverse_mismatch, m);
    s.refits = run->value.refits;
    s.accepted_refits = run->value.accepted_refits;
    for (const SwitchDecision& d : r.decisions) ++s.chosen[static_cast<int>(d.chosen)];
    *out = s;
  });
}

void hc_run_free(hc_run* run) { delete run; }

hc_status hc_nmle_fit(const double* variance, size_t n, double dt, hc_nmle* out) {
  std::string reason;
  const hc_status status = guard([&] {
    require(out && (n == 0 || variance), "null argument");
    const NmleEstimate e = nmle_fit(std::span<const double>(variance, n), dt);
    *out = hc_nmle{e.kappa_hat, e.theta_hat, e.sigma_hat, e.p_hat, e.n_used, e.degenerate ? 1 : 0};
    reason = e.reason;
  });
  if (status == HC_OK) t_error = reason;
  return status;
}

hc_status hc_black_scholes(int is_call, double spot, double strike, double r, double vol, double tau,
                           double* out) {
  return guard([&] {
    require(out, "null argument");
    *out = black_scholes_price(is_call ? OptionType::Call : OptionType::Put, spot, strike, r, vol, tau);
  });
}

hc_status hc_vol_series_load(const char* path, const char* column, const char* label, double scale,
                             hc_vol_series** out) {
  return guard([&] {
    require(path && column && out, "null argument");
    *out = nullptr;
    *out = new hc_vol_series{read_vol_column(path, column, label ? label : column, scale), {}};
  });
}

hc_status hc_vol_series_from_arrays(const char* const* dates, const double* values, size_t n, const char* label,
                                    hc_vol_series** out) {
  return guard([&] {
    require(out && (n == 0 || (dates && values)), "null argument");
    *out = nullptr;
    ReferenceVolSeries s;
    s.dates = parse_dates(dates, n);
    s.values.assign(values, values + n);
    s.label = label ? label : "";
    for (std::size_t i = 1; i < n; ++i) require(s.dates[i] > s.dates[i - 1], "dates must be strictly increasing");
    *out = new hc_vol_series{std::move(s), {}};
  });
}

hc_status hc_historical_vol(const hc_prices* prices, int window, hc_vol_series** out) {
  return guard([&] {
    require(prices && out, "null argument");
    *out = nullptr;
    *out = new hc_vol_series{historical_volatility(prices->value, window), {}};
  });
}

size_t hc_vol_series_size(const hc_vol_series* series) { return series ? series->value.values.size() : 0; }

const char* hc_vol_series_date(hc_vol_series* series, size_t index) {
  if (!series || index >= series->value.dates.size()) return nullptr;
  return keep(series->text, format_date(series->value.dates[index]));
}

double hc_vol_series_value(const hc_vol_series* series, size_t index) {
  if (!series || index >= series->value.values.size()) return kNaN;
  return series->value.values[index];
}

const char* hc_vol_series_label(const hc_vol_series* series) { return series ? series->value.label.c_str() : nullptr; }

void hc_vol_series_free(hc_vol_series* series) { delete series; }

hc_status hc_vol_rmse(const hc_vol_series* estimate, const hc_vol_series* reference, double* rmse, size_t* overlap) {
  return guard([&] {
    require(estimate && reference && rmse, "null argument");
    const JoinedRmse j = joined_rmse(estimate->value, reference->value);
    *rmse = j.rmse;
    if (overlap) *overlap = j.overlap;
  });
}

hc_status hc_options_load(const char* path, hc_options** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = nullptr;
    *out = new hc_options{read_option_csv(path)};
  });
}

size_t hc_options_size(const hc_options* options) { return options ? options->value.size() : 0; }

hc_status hc_option_rmse_get(const hc_options* options, const hc_vol_series* vols, double r, hc_option_rmse* out) {
  return guard([&] {
    require(options && vols && out, "null argument");
    const OptionRmse o = option_rmse(options->value, vols->value, r);
    *out = hc_option_rmse{o.quotes, o.rmse, o.rmse_normalized};
  });
}

void hc_options_free(hc_options* options) { delete options; }

}  // extern "C"
