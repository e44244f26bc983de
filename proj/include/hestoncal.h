#ifndef HESTONCAL_H
#define HESTONCAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HC_API __declspec(dllexport)
#else
#define HC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returning hc_status leaves a message in hc_last_error() on
 * failure. Handles are owned by the caller and released with the matching
 * *_free function; strings returned by accessors stay valid until the handle
 * is freed or the next call on the same handle. */

typedef enum hc_status {
  HC_OK = 0,
  HC_INVALID_ARGUMENT = 1,
  HC_INVALID_PARAMS = 2,
  HC_NON_FINITE = 3,
  HC_DEGENERATE_INNOVATION = 4,
  HC_PARTICLE_DEGENERACY = 5,
  HC_DEGENERATE_NOISE = 6,
  HC_SINGULAR_MATRIX = 7,
  HC_INVALID_COVARIANCE = 8,
  HC_DEGENERATE_SERIES = 9,
  HC_IO = 10,
  HC_PARSE = 11,
  HC_CONFIG = 12,
  HC_INTERNAL = 99
} hc_status;

typedef enum hc_filter { HC_FILTER_EKF = 0, HC_FILTER_UKF = 1, HC_FILTER_PF = 2 } hc_filter;

typedef enum hc_log_level { HC_LOG_DEBUG = 0, HC_LOG_INFO = 1, HC_LOG_WARNING = 2, HC_LOG_ERROR = 3 } hc_log_level;

typedef void (*hc_log_fn)(hc_log_level level, const char* message, void* user);

typedef struct hc_params {
  double kappa;
  double theta;
  double sigma;
  double rho;
  double r;
  double dt;
} hc_params;

HC_API const char* hc_version(void);
HC_API const char* hc_status_name(hc_status status);
HC_API const char* hc_filter_name(hc_filter filter);

/* Thread-local; "" after a successful call. */
HC_API const char* hc_last_error(void);
/* Per-field diagnostics ("section.key: message") of the last HC_CONFIG error. */
HC_API size_t hc_last_error_field_count(void);
HC_API const char* hc_last_error_field(size_t index);

/* Process-wide; NULL silences logging. */
HC_API void hc_set_log_callback(hc_log_fn fn, void* user);

HC_API hc_status hc_validate_params(const hc_params* params);

/* ---- configuration ---- */

typedef struct hc_config hc_config;

HC_API hc_status hc_config_default(hc_config** out);
HC_API hc_status hc_config_load(const char* path, hc_config** out);
HC_API hc_status hc_config_set(hc_config* config, const char* key, const char* value);
/* NULL for unknown keys. */
HC_API const char* hc_config_get(hc_config* config, const char* key);
HC_API hc_status hc_config_validate(const hc_config* config);
HC_API const char* hc_config_hash(hc_config* config);
/* "section.key=value" lines. */
HC_API const char* hc_config_canonical(hc_config* config);
HC_API hc_status hc_config_model(const hc_config* config, hc_params* out);
HC_API size_t hc_config_key_count(void);
HC_API const char* hc_config_key(size_t index);
HC_API void hc_config_free(hc_config* config);

/* ---- price series ---- */

typedef struct hc_prices hc_prices;

HC_API hc_status hc_prices_load(const char* path, hc_prices** out);
/* Dates are YYYY-MM-DD. */
HC_API hc_status hc_prices_from_arrays(const char* const* dates, const double* closes, size_t n, hc_prices** out);
HC_API hc_status hc_prices_save(const hc_prices* prices, const char* path, const char* config_hash);
HC_API size_t hc_prices_size(const hc_prices* prices);
HC_API const char* hc_prices_date(hc_prices* prices, size_t index);
HC_API double hc_prices_close(const hc_prices* prices, size_t index);
/* Writes hc_prices_size() values of log(S_k / S_0). */
HC_API hc_status hc_prices_log_ratios(const hc_prices* prices, double* out);
HC_API void hc_prices_free(hc_prices* prices);

/* ---- simulation ---- */

typedef struct hc_path hc_path;

/* Uses [model], [simulate] and run.seed; n + 1 points on business days. */
HC_API hc_status hc_simulate(const hc_config* config, hc_path** out);
HC_API size_t hc_path_size(const hc_path* path);
HC_API double hc_path_variance(const hc_path* path, size_t index);
HC_API size_t hc_path_floor_hits(const hc_path* path);
/* Borrowed; owned by the path. */
HC_API hc_prices* hc_path_prices(hc_path* path);
HC_API void hc_path_free(hc_path* path);

/* ---- filtering, switching and calibration ---- */

typedef struct hc_run hc_run;

typedef struct hc_track_row {
  int step;
  hc_filter chosen;
  double variance;
  double volatility;
  double pcrlb_trace;
  double inverse_mismatch;
  double phi[3];             /* indexed by hc_filter; NaN when absent */
  double member_variance[3]; /* indexed by hc_filter; NaN when absent */
  int clamped;               /* diagonal entries clamped this step */
} hc_track_row;

typedef struct hc_param_row {
  int step;
  hc_params params;
  int accepted;
  int degenerate;
  double kappa_hat;
  double theta_hat;
  double sigma_hat;
  size_t n_used;
} hc_param_row;

typedef struct hc_run_stats {
  size_t steps;
  long clamp_events;
  long metric_evaluations;
  double clamp_rate;
  double max_inverse_mismatch;
  int refits;
  int accepted_refits;
  size_t chosen[3]; /* indexed by hc_filter */
} hc_run_stats;

/* Filter bank and switching at the [model] parameters, no refits. */
HC_API hc_status hc_run_switching(const hc_config* config, const hc_prices* prices, hc_run** out);
/* Alternating switching / NMLE calibration. The initial guess is drawn from
 * the configured ranges or taken from [model]. */
HC_API hc_status hc_calibrate(const hc_config* config, const hc_prices* prices, hc_run** out);
HC_API hc_status hc_calibrate_from(const hc_config* config, const hc_prices* prices, const hc_params* init,
                                   hc_run** out);

HC_API size_t hc_run_track_size(const hc_run* run);
HC_API hc_status hc_run_track_row(const hc_run* run, size_t index, hc_track_row* out);
HC_API size_t hc_run_param_rows(const hc_run* run);
HC_API hc_status hc_run_param_row(const hc_run* run, size_t index, hc_param_row* out);
HC_API hc_status hc_run_final_params(const hc_run* run, hc_params* out);
HC_API hc_status hc_run_stats_get(const hc_run* run, hc_run_stats* out);
HC_API void hc_run_free(hc_run* run);

/* ---- NMLE ---- */

typedef struct hc_nmle {
  double kappa;
  double theta;
  double sigma;
  double p;
  size_t n_used;
  int degenerate;
} hc_nmle;

/* Fits a variance series of length n; degenerate fits return HC_OK with the
 * flag set and the reason in hc_last_error(). */
HC_API hc_status hc_nmle_fit(const double* variance, size_t n, double dt, hc_nmle* out);

/* ---- market data ---- */

typedef struct hc_vol_series hc_vol_series;
typedef struct hc_options hc_options;

typedef struct hc_option_rmse {
  size_t quotes;
  double rmse;
  double rmse_normalized;
} hc_option_rmse;

HC_API hc_status hc_black_scholes(int is_call, double spot, double strike, double r, double vol, double tau,
                                  double* out);

/* A `date` column and the named value column, divided by scale. */
HC_API hc_status hc_vol_series_load(const char* path, const char* column, const char* label, double scale,
                                    hc_vol_series** out);
HC_API hc_status hc_vol_series_from_arrays(const char* const* dates, const double* values, size_t n,
                                           const char* label, hc_vol_series** out);
HC_API hc_status hc_historical_vol(const hc_prices* prices, int window, hc_vol_series** out);
HC_API size_t hc_vol_series_size(const hc_vol_series* series);
HC_API const char* hc_vol_series_date(hc_vol_series* series, size_t index);
HC_API double hc_vol_series_value(const hc_vol_series* series, size_t index);
HC_API const char* hc_vol_series_label(const hc_vol_series* series);
HC_API void hc_vol_series_free(hc_vol_series* series);

/* RMSE over the dates present in both series. */
HC_API hc_status hc_vol_rmse(const hc_vol_series* estimate, const hc_vol_series* reference, double* rmse,
                             size_t* overlap);

HC_API hc_status hc_options_load(const char* path, hc_options** out);
HC_API size_t hc_options_size(const hc_options* options);
HC_API hc_status hc_option_rmse_get(const hc_options* options, const hc_vol_series* vols, double r,
                                    hc_option_rmse* out);
HC_API void hc_options_free(hc_options* options);

#ifdef __cplusplus
}
#endif

#endif
