#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hestoncal.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure {
  hc_status status;
  std::string message;
  std::vector<std::string> fields;
};

void check(hc_status status) {
  if (status == HC_OK) return;
  Failure f{status, hc_last_error(), {}};
  for (size_t i = 0; i < hc_last_error_field_count(); ++i) f.fields.emplace_back(hc_last_error_field(i));
  throw f;
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{HC_INVALID_ARGUMENT, message, {}}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Config = std::unique_ptr<hc_config, Deleter<hc_config, hc_config_free>>;
using Prices = std::unique_ptr<hc_prices, Deleter<hc_prices, hc_prices_free>>;
using Path = std::unique_ptr<hc_path, Deleter<hc_path, hc_path_free>>;
using Run = std::unique_ptr<hc_run, Deleter<hc_run, hc_run_free>>;
using VolSeries = std::unique_ptr<hc_vol_series, Deleter<hc_vol_series, hc_vol_series_free>>;
using Options = std::unique_ptr<hc_options, Deleter<hc_options, hc_options_free>>;

std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct Settings {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> particles;
  std::optional<int> refit_interval;
  std::string fix_rho;
  std::optional<int> window;
  std::vector<std::string> overrides;
  bool verbose = false;

  std::string prices;
  std::string track;
  std::string truth;
  std::string vix;
  std::string options;
  std::string init;
};

class RunLog {
 public:
  void add(json event) { events_.push_back(std::move(event)); }

  void write(const std::string& dir) const {
    if (dir.empty()) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(fs::path(dir) / "run_log.jsonl", std::ios::app);
    for (const json& e : events_) out << e.dump() << '\n';
  }

 private:
  std::vector<json> events_;
};

RunLog g_log;
bool g_verbose = false;
std::string g_out_dir;  // set once a command has resolved its configuration

void on_log(hc_log_level level, const char* message, void*) {
  static const char* names[] = {"debug", "info", "warning", "error"};
  g_log.add(json{{"event", "log"}, {"level", names[level]}, {"message", message}});
  if (g_verbose) std::cerr << names[level] << ": " << message << '\n';
}

// Applies every override, then validates; all problems are reported together.
Config build_config(const Settings& s) {
  hc_config* raw = nullptr;
  check(s.config_path.empty() ? hc_config_default(&raw) : hc_config_load(s.config_path.c_str(), &raw));
  Config c(raw);
  std::vector<std::string> problems;
  auto set = [&](const std::string& key, const std::string& value) {
    if (hc_config_set(c.get(), key.c_str(), value.c_str()) == HC_OK) return;
    for (size_t i = 0; i < hc_last_error_field_count(); ++i) problems.emplace_back(hc_last_error_field(i));
    if (hc_last_error_field_count() == 0) problems.push_back(key + ": " + hc_last_error());
  };
  for (const std::string& kv : s.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) usage_error("--set expects section.key=value, got '" + kv + "'");
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (s.seed) set("run.seed", std::to_string(*s.seed));
  if (!s.out_dir.empty()) set("run.out_dir", s.out_dir);
  if (s.particles) set("filters.particles", std::to_string(*s.particles));
  if (s.refit_interval) set("calibration.refit_interval", std::to_string(*s.refit_interval));
  if (!s.fix_rho.empty()) set("calibration.fix_rho", s.fix_rho);
  if (s.window) set("report.hist_window", std::to_string(*s.window));
  if (!s.init.empty()) set("calibration.init", s.init);
  if (hc_config_validate(c.get()) != HC_OK) {
    for (size_t i = 0; i < hc_last_error_field_count(); ++i) problems.emplace_back(hc_last_error_field(i));
  }
  if (!problems.empty()) {
    std::string message = "invalid configuration";
    for (const std::string& p : problems) message += "\n  " + p;
    throw Failure{HC_CONFIG, message, problems};
  }
  return c;
}

std::string get(hc_config* c, const char* key) {
  const char* v = hc_config_get(c, key);
  return v ? v : "";
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& hash, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw Failure{HC_IO, "cannot write " + path.string(), {}};
    out_ << "# config_hash=" << hash << '\n' << header << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  std::string finish() {
    out_.close();
    if (!out_) throw Failure{HC_IO, "failed writing " + path_.string(), {}};
    return path_.string();
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

struct Context {
  Config config;
  std::string hash;
  fs::path out_dir;
  json outputs = json::array();

  void output(const std::string& path) { outputs.push_back(fs::path(path).filename().string()); }
};

Context open_context(const Settings& s, const std::string& command) {
  Context ctx{build_config(s), {}, {}, json::array()};
  ctx.hash = hc_config_hash(ctx.config.get());
  ctx.out_dir = get(ctx.config.get(), "run.out_dir");
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw Failure{HC_IO, "cannot create " + ctx.out_dir.string() + ": " + ec.message(), {}};
  g_out_dir = ctx.out_dir.string();
  g_log.add(json{{"event", "start"},
                 {"command", command},
                 {"version", hc_version()},
                 {"config_hash", ctx.hash},
                 {"seed", get(ctx.config.get(), "run.seed")}});
  return ctx;
}

Prices load_prices(const std::string& path) {
  if (path.empty()) usage_error("--prices is required");
  hc_prices* raw = nullptr;
  check(hc_prices_load(path.c_str(), &raw));
  return Prices(raw);
}

json params_json(const hc_params& p) {
  return json{{"kappa", p.kappa}, {"theta", p.theta}, {"sigma", p.sigma}, {"rho", p.rho}};
}

void cmd_simulate(const Settings& s) {
  Context ctx = open_context(s, "simulate");
  hc_path* raw = nullptr;
  check(hc_simulate(ctx.config.get(), &raw));
  Path path(raw);
  hc_prices* prices = hc_path_prices(path.get());

  const std::string prices_file = (ctx.out_dir / "prices.csv").string();
  check(hc_prices_save(prices, prices_file.c_str(), ctx.hash.c_str()));
  ctx.output(prices_file);

  Csv truth(ctx.out_dir / "simulated_path.csv", ctx.hash, "step,date,close,variance,volatility");
  for (size_t k = 0; k < hc_path_size(path.get()); ++k) {
    const double v = hc_path_variance(path.get(), k);
    truth.row({std::to_string(k), hc_prices_date(prices, k), num(hc_prices_close(prices, k)), num(v), num(std::sqrt(v))});
  }
  ctx.output(truth.finish());

  g_log.add(json{{"event", "summary"},
                 {"points", hc_path_size(path.get())},
                 {"floor_hits", hc_path_floor_hits(path.get())},
                 {"outputs", ctx.outputs}});
  std::cout << "simulated " << hc_path_size(path.get()) - 1 << " steps into " << ctx.out_dir.string() << '\n';
}

void write_track(Context& ctx, hc_run* run, hc_prices* prices) {
  Csv track(ctx.out_dir / "volatility_track.csv", ctx.hash,
            "step,date,chosen_filter,variance,volatility,pcrlb_trace,phi_ekf,phi_ukf,phi_pf");
  hc_track_row r;
  for (size_t i = 0; i < hc_run_track_size(run); ++i) {
    check(hc_run_track_row(run, i, &r));
    track.row({std::to_string(r.step), hc_prices_date(prices, static_cast<size_t>(r.step)), hc_filter_name(r.chosen),
               num(r.variance), num(r.volatility), num(r.pcrlb_trace), num(r.phi[0]), num(r.phi[1]), num(r.phi[2])});
  }
  ctx.output(track.finish());
}

json run_summary(hc_run* run) {
  hc_run_stats st;
  check(hc_run_stats_get(run, &st));
  hc_params p;
  check(hc_run_final_params(run, &p));
  return json{{"event", "summary"},
              {"steps", st.steps},
              {"chosen", {{"ekf", st.chosen[0]}, {"ukf", st.chosen[1]}, {"pf", st.chosen[2]}}},
              {"clamp_events", st.clamp_events},
              {"clamp_rate", st.clamp_rate},
              {"max_inverse_mismatch", st.max_inverse_mismatch},
              {"refits", st.refits},
              {"accepted_refits", st.accepted_refits},
              {"final_params", params_json(p)}};
}

void print_summary(const json& summary) {
  const json& p = summary["final_params"];
  std::cout << "steps " << summary["steps"] << "  chosen ekf/ukf/pf " << summary["chosen"]["ekf"] << "/"
            << summary["chosen"]["ukf"] << "/" << summary["chosen"]["pf"] << "  clamp rate "
            << num(summary["clamp_rate"].get<double>()) << '\n';
  std::cout << "refits " << summary["accepted_refits"] << "/" << summary["refits"] << " accepted  kappa "
            << num(p["kappa"].get<double>()) << " theta " << num(p["theta"].get<double>()) << " sigma "
            << num(p["sigma"].get<double>()) << " rho " << num(p["rho"].get<double>()) << '\n';
}

void cmd_calibrate(const Settings& s) {
  Context ctx = open_context(s, "calibrate");
  Prices prices = load_prices(s.prices);
  hc_run* raw = nullptr;
  check(hc_calibrate(ctx.config.get(), prices.get(), &raw));
  Run run(raw);

  write_track(ctx, run.get(), prices.get());
  Csv traj(ctx.out_dir / "params_trajectory.csv", ctx.hash, "step,kappa,theta,sigma,rho,accepted");
  hc_param_row row;
  for (size_t i = 0; i < hc_run_param_rows(run.get()); ++i) {
    check(hc_run_param_row(run.get(), i, &row));
    traj.row({std::to_string(row.step), num(row.params.kappa), num(row.params.theta), num(row.params.sigma),
              num(row.params.rho), row.accepted ? "1" : "0"});
  }
  ctx.output(traj.finish());

  json summary = run_summary(run.get());
  summary["outputs"] = ctx.outputs;
  g_log.add(summary);
  print_summary(summary);
}

void cmd_filter_bank(const Settings& s) {
  Context ctx = open_context(s, "filter-bank");
  Prices prices = load_prices(s.prices);
  hc_run* raw = nullptr;
  check(hc_run_switching(ctx.config.get(), prices.get(), &raw));
  Run run(raw);

  write_track(ctx, run.get(), prices.get());
  Csv members(ctx.out_dir / "filter_bank.csv", ctx.hash, "step,date,ekf,ukf,pf");
  hc_track_row r;
  for (size_t i = 0; i < hc_run_track_size(run.get()); ++i) {
    check(hc_run_track_row(run.get(), i, &r));
    members.row({std::to_string(r.step), hc_prices_date(prices.get(), static_cast<size_t>(r.step)),
                 num(r.member_variance[0]), num(r.member_variance[1]), num(r.member_variance[2])});
  }
  ctx.output(members.finish());

  json summary = run_summary(run.get());
  summary["outputs"] = ctx.outputs;
  g_log.add(summary);
  print_summary(summary);
}

VolSeries load_vol(const std::string& path, const char* column, const char* label, double scale) {
  hc_vol_series* raw = nullptr;
  check(hc_vol_series_load(path.c_str(), column, label, scale, &raw));
  return VolSeries(raw);
}

void cmd_report(const Settings& s) {
  Context ctx = open_context(s, "report");
  if (s.track.empty()) usage_error("--track is required");
  const double vix_scale = std::stod(get(ctx.config.get(), "report.vix_scale"));
  const double r = std::stod(get(ctx.config.get(), "model.r"));
  const int window = std::stoi(get(ctx.config.get(), "report.hist_window"));

  std::vector<VolSeries> estimates;
  estimates.push_back(load_vol(s.track, "volatility", "proposed", 1.0));
  if (!s.prices.empty()) {
    Prices prices = load_prices(s.prices);
    hc_vol_series* raw = nullptr;
    check(hc_historical_vol(prices.get(), window, &raw));
    estimates.emplace_back(raw);
  }
  std::vector<VolSeries> references;
  if (!s.truth.empty()) references.push_back(load_vol(s.truth, "volatility", "truth", 1.0));
  if (!s.vix.empty()) references.push_back(load_vol(s.vix, "vol", "vix", vix_scale));
  if (references.empty() && s.options.empty()) usage_error("report needs --truth, --vix or --options");

  Csv report(ctx.out_dir / "rmse_report.csv", ctx.hash, "metric,estimate,reference,n,rmse");
  json rows = json::array();
  auto emit = [&](const char* metric, const char* est, const char* ref, size_t n, double value) {
    report.row({metric, est, ref, std::to_string(n), num(value)});
    rows.push_back(json{{"metric", metric}, {"estimate", est}, {"reference", ref}, {"n", n}, {"rmse", value}});
    std::printf("%-24s %-12s %-8s %8zu  %.6g\n", metric, est, ref, n, value);
  };

  for (const VolSeries& e : estimates) {
    for (const VolSeries& ref : references) {
      double value = 0.0;
      size_t n = 0;
      check(hc_vol_rmse(e.get(), ref.get(), &value, &n));
      emit("volatility", hc_vol_series_label(e.get()), hc_vol_series_label(ref.get()), n, value);
    }
  }
  if (!s.options.empty()) {
    hc_options* raw = nullptr;
    check(hc_options_load(s.options.c_str(), &raw));
    Options quotes(raw);
    std::vector<const hc_vol_series*> sources;
    for (const VolSeries& e : estimates) sources.push_back(e.get());
    for (const VolSeries& ref : references) {
      if (std::string(hc_vol_series_label(ref.get())) == "vix") sources.push_back(ref.get());
    }
    for (const hc_vol_series* src : sources) {
      hc_option_rmse o;
      check(hc_option_rmse_get(quotes.get(), src, r, &o));
      emit("option_price", hc_vol_series_label(src), "market", o.quotes, o.rmse);
      emit("option_price_normalized", hc_vol_series_label(src), "market", o.quotes, o.rmse_normalized);
    }
  }
  ctx.output(report.finish());
  g_log.add(json{{"event", "summary"}, {"rows", rows}, {"outputs", ctx.outputs}});
}

void cmd_config(const Settings& s) {
  Config c = build_config(s);
  std::cout << hc_config_canonical(c.get()) << "run.out_dir=" << get(c.get(), "run.out_dir") << '\n'
            << "# config_hash=" << hc_config_hash(c.get()) << '\n';
}

json error_json(const Failure& f) {
  return json{{"status", hc_status_name(f.status)},
              {"code", static_cast<int>(f.status)},
              {"message", f.message},
              {"fields", f.fields}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heston volatility filtering and calibration"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", hc_version());

  Settings s;
  app.add_option("-c,--config", s.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", s.seed, "Random seed");
  app.add_option("-o,--out-dir", s.out_dir, "Output directory");
  app.add_option("--particles", s.particles, "Particle filter size");
  app.add_option("--refit-interval", s.refit_interval, "Steps between parameter refits (0 disables)");
  app.add_option("--fix-rho", s.fix_rho, "Keep rho at its configured value (true/false)");
  app.add_option("--window", s.window, "Historical volatility window in trading days");
  app.add_option("--set", s.overrides, "Override a configuration value, section.key=value");
  app.add_flag("-v,--verbose", s.verbose, "Echo log messages to stderr");

  auto* simulate = app.add_subcommand("simulate", "Simulate a Heston price path");
  auto* calibrate = app.add_subcommand("calibrate", "Track volatility and re-estimate parameters");
  calibrate->add_option("--prices", s.prices, "Price CSV (date,close)")->required();
  calibrate->add_option("--init", s.init, "Initial parameters: ranges or model");
  auto* bank = app.add_subcommand("filter-bank", "Run the filter bank and switching at fixed parameters");
  bank->add_option("--prices", s.prices, "Price CSV (date,close)")->required();
  auto* report = app.add_subcommand("report", "RMSE of volatility tracks against references");
  report->add_option("--track", s.track, "volatility_track.csv")->required();
  report->add_option("--prices", s.prices, "Price CSV for historical volatility");
  report->add_option("--truth", s.truth, "simulated_path.csv with the true volatility");
  report->add_option("--vix", s.vix, "Reference volatility CSV (date,vol)");
  report->add_option("--options", s.options, "Option quotes CSV");
  auto* config = app.add_subcommand("config", "Print the resolved configuration and its hash");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"status", "usage"}, {"code", 2}, {"message", e.what()}, {"fields", json::array()}}}}.dump()
              << '\n';
    return 2;
  }

  g_verbose = s.verbose;
  hc_set_log_callback(on_log, nullptr);
  int status = 0;
  try {
    if (*simulate) cmd_simulate(s);
    if (*calibrate) cmd_calibrate(s);
    if (*bank) cmd_filter_bank(s);
    if (*report) cmd_report(s);
    if (*config) cmd_config(s);
    g_log.add(json{{"event", "finish"}, {"status", "ok"}});
  } catch (const Failure& f) {
    const json err = error_json(f);
    g_log.add(json{{"event", "error"}, {"error", err}});
    std::cerr << json{{"error", err}}.dump() << '\n';
    status = f.status == HC_CONFIG || f.status == HC_INVALID_ARGUMENT ? 2 : 1;
  }
  hc_set_log_callback(nullptr, nullptr);
  g_log.write(g_out_dir);
  return status;
}
