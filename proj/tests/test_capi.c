#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hestoncal.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void count_logs(hc_log_level level, const char* message, void* user) {
  (void)level;
  (void)message;
  ++*(int*)user;
}

static void test_errors(void) {
  hc_params bad = {-1.0, 0.2, 0.5, 0.0, 0.0, 1.0 / 252.0};
  EXPECT(hc_validate_params(&bad) == HC_INVALID_PARAMS);
  EXPECT(strstr(hc_last_error(), "kappa") != NULL);
  hc_params good = {2.0, 0.2, 0.5, 0.0, 0.0, 1.0 / 252.0};
  EXPECT(hc_validate_params(&good) == HC_OK);
  EXPECT(strcmp(hc_last_error(), "") == 0);
  EXPECT(hc_validate_params(NULL) == HC_INVALID_ARGUMENT);
  EXPECT(strcmp(hc_status_name(HC_DEGENERATE_SERIES), "degenerate_series") == 0);

  hc_prices* p = NULL;
  EXPECT(hc_prices_load("/nonexistent/prices.csv", &p) == HC_IO);
  EXPECT(p == NULL);
}

static void test_config(void) {
  hc_config* c = NULL;
  EXPECT(hc_config_default(&c) == HC_OK);
  const char* h = hc_config_hash(c);
  char hash[17] = {0};
  memcpy(hash, h, 16);
  EXPECT(strlen(hash) == 16);
  EXPECT(strcmp(hc_config_get(c, "model.kappa"), "10.8") == 0);
  EXPECT(hc_config_get(c, "model.nothing") == NULL);

  EXPECT(hc_config_set(c, "filters.bank", "ekf,kf") == HC_CONFIG);
  EXPECT(hc_last_error_field_count() == 1);
  EXPECT(strncmp(hc_last_error_field(0), "filters.bank:", 13) == 0);

  EXPECT(hc_config_set(c, "run.out_dir", "elsewhere") == HC_OK);
  EXPECT(strcmp(hc_config_hash(c), hash) == 0);
  EXPECT(hc_config_set(c, "model.rho", "2") == HC_OK);
  EXPECT(hc_config_validate(c) == HC_CONFIG);
  EXPECT(hc_config_key_count() == 27);
  EXPECT(strcmp(hc_config_key(0), "model.kappa") == 0);
  hc_config_free(c);
}

static void test_pipeline(void) {
  hc_config* c = NULL;
  EXPECT(hc_config_default(&c) == HC_OK);
  hc_config_set(c, "simulate.steps", "300");
  hc_config_set(c, "filters.particles", "200");
  hc_config_set(c, "run.seed", "5");

  hc_path* path = NULL;
  EXPECT(hc_simulate(c, &path) == HC_OK);
  EXPECT(hc_path_size(path) == 301);
  hc_prices* prices = hc_path_prices(path);
  EXPECT(hc_prices_size(prices) == 301);
  EXPECT(strcmp(hc_prices_date(prices, 0), "2020-01-01") == 0);
  EXPECT(strcmp(hc_prices_date(prices, 3), "2020-01-06") == 0);
  EXPECT(hc_prices_close(prices, 0) == 100.0);
  EXPECT(isnan(hc_prices_close(prices, 301)));

  double* y = malloc(sizeof(double) * 301);
  EXPECT(hc_prices_log_ratios(prices, y) == HC_OK);
  EXPECT(y[0] == 0.0);
  EXPECT(fabs(y[10] - log(hc_prices_close(prices, 10) / 100.0)) < 1e-15);
  free(y);

  int logs = 0;
  hc_set_log_callback(count_logs, &logs);
  hc_run* run = NULL;
  EXPECT(hc_calibrate(c, prices, &run) == HC_OK);
  hc_set_log_callback(NULL, NULL);
  EXPECT(logs > 0);
  EXPECT(hc_run_track_size(run) == 300);

  hc_track_row row;
  EXPECT(hc_run_track_row(run, 0, &row) == HC_OK);
  EXPECT(row.step == 1);
  EXPECT(row.volatility == sqrt(row.variance));
  EXPECT(row.phi[row.chosen] >= row.phi[0] && row.phi[row.chosen] >= row.phi[1] && row.phi[row.chosen] >= row.phi[2]);
  EXPECT(row.pcrlb_trace > 0.0);
  EXPECT(hc_run_track_row(run, 300, &row) == HC_INVALID_ARGUMENT);

  hc_run_stats st;
  EXPECT(hc_run_stats_get(run, &st) == HC_OK);
  EXPECT(st.steps == 300);
  EXPECT(st.chosen[0] + st.chosen[1] + st.chosen[2] == 300);
  EXPECT(st.refits == 11);
  EXPECT(hc_run_param_rows(run) == 12);
  hc_param_row prow;
  EXPECT(hc_run_param_row(run, 1, &prow) == HC_OK);
  EXPECT(prow.step == 100);
  EXPECT(prow.n_used == 99);

  hc_run* again = NULL;
  EXPECT(hc_calibrate(c, prices, &again) == HC_OK);
  hc_params a, b;
  hc_run_final_params(run, &a);
  hc_run_final_params(again, &b);
  EXPECT(memcmp(&a, &b, sizeof a) == 0);
  hc_run_free(again);

  hc_run* fixed = NULL;
  EXPECT(hc_run_switching(c, prices, &fixed) == HC_OK);
  hc_params model;
  hc_config_model(c, &model);
  hc_run_final_params(fixed, &b);
  EXPECT(memcmp(&model, &b, sizeof b) == 0);
  EXPECT(hc_run_param_rows(fixed) == 1);
  hc_run_free(fixed);

  hc_vol_series* hist = NULL;
  EXPECT(hc_historical_vol(prices, 30, &hist) == HC_OK);
  EXPECT(hc_vol_series_size(hist) == 271);
  EXPECT(strcmp(hc_vol_series_date(hist, 0), hc_prices_date(prices, 30)) == 0);
  double rmse = 0.0;
  size_t overlap = 0;
  EXPECT(hc_vol_rmse(hist, hist, &rmse, &overlap) == HC_OK);
  EXPECT(rmse == 0.0 && overlap == 271);
  hc_vol_series_free(hist);

  hc_run_free(run);
  hc_path_free(path);
  hc_config_free(c);
}

static void test_market(void) {
  double price = 0.0;
  EXPECT(hc_black_scholes(1, 100.0, 100.0, 0.0, 0.2, 1.0, &price) == HC_OK);
  EXPECT(fabs(price - 7.965567455405804) < 1e-9);

  const char* dates[] = {"2021-01-04", "2021-01-05", "2021-01-06"};
  const double closes[] = {100.0, 101.0, 99.0};
  hc_prices* p = NULL;
  EXPECT(hc_prices_from_arrays(dates, closes, 3, &p) == HC_OK);
  hc_prices_free(p);
  const char* unordered[] = {"2021-01-05", "2021-01-04", "2021-01-06"};
  EXPECT(hc_prices_from_arrays(unordered, closes, 3, &p) == HC_INVALID_ARGUMENT);

  const double vols[] = {0.2, 0.25, 0.3};
  hc_vol_series* v = NULL;
  EXPECT(hc_vol_series_from_arrays(dates, vols, 3, "x", &v) == HC_OK);
  EXPECT(strcmp(hc_vol_series_label(v), "x") == 0);
  hc_vol_series_free(v);

  const double track[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  hc_nmle fit;
  EXPECT(hc_nmle_fit(track, 2, 1.0 / 252.0, &fit) == HC_OK);
  EXPECT(fit.degenerate == 1);
  EXPECT(strlen(hc_last_error()) > 0);
}

int main(void) {
  test_errors();
  test_config();
  test_pipeline();
  test_market();
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("C API: all checks passed\n");
  return 0;
}
