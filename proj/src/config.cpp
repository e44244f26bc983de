#include "hestoncal/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hestoncal/market.hpp"

namespace hestoncal {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double plain_number(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a number, got '" + text + "'");
  }
  return v;
}

// Accepts "a/b" as well as plain numbers.
double to_double(const std::string& raw) {
  const std::string text = trim(raw);
  const std::size_t slash = text.find('/');
  if (slash == std::string::npos) return plain_number(text);
  const double den = plain_number(trim(text.substr(slash + 1)));
  if (den == 0.0) throw std::invalid_argument("division by zero in '" + text + "'");
  return plain_number(trim(text.substr(0, slash))) / den;
}

long long to_integer(const std::string& raw) {
  const std::string text = trim(raw);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  }
  return v;
}

int to_int(const std::string& raw) {
  const long long v = to_integer(raw);
  if (v < -1000000000LL || v > 1000000000LL) throw std::invalid_argument("integer out of range");
  return static_cast<int>(v);
}

bool to_bool(const std::string& raw) {
  const std::string t = lower(trim(raw));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + trim(raw) + "'");
}

ParamRange to_range(const std::string& raw) {
  const std::string text = trim(raw);
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected 'lo,hi', got '" + text + "'");
  return ParamRange{to_double(text.substr(0, comma)), to_double(text.substr(comma + 1))};
}

std::vector<FilterKind> to_bank(const std::string& raw) {
  std::vector<FilterKind> bank;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = lower(trim(item));
    FilterKind k;
    if (t == "ekf") {
      k = FilterKind::Ekf;
    } else if (t == "ukf") {
      k = FilterKind::Ukf;
    } else if (t == "pf") {
      k = FilterKind::Pf;
    } else {
      throw std::invalid_argument("unknown filter '" + trim(item) + "' (expected ekf, ukf, pf)");
    }
    if (std::find(bank.begin(), bank.end(), k) != bank.end()) throw std::invalid_argument("filter listed twice");
    bank.push_back(k);
  }
  if (bank.empty()) throw std::invalid_argument("filter bank is empty");
  return bank;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_range(const ParamRange& r) { return fmt(r.lo) + "," + fmt(r.hi); }

std::string fmt_bank(const std::vector<FilterKind>& bank) {
  std::string out;
  for (FilterKind k : bank) out += (out.empty() ? "" : ",") + lower(std::string(filter_name(k)));
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
  bool hashed = true;
};

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      {"model.kappa", [](const RunConfig& c) { return fmt(c.model.kappa); },
       [](RunConfig& c, const std::string& v) { c.model.kappa = to_double(v); }},
      {"model.theta", [](const RunConfig& c) { return fmt(c.model.theta); },
       [](RunConfig& c, const std::string& v) { c.model.theta = to_double(v); }},
      {"model.sigma", [](const RunConfig& c) { return fmt(c.model.sigma); },
       [](RunConfig& c, const std::string& v) { c.model.sigma = to_double(v); }},
      {"model.rho", [](const RunConfig& c) { return fmt(c.model.rho); },
       [](RunConfig& c, const std::string& v) { c.model.rho = to_double(v); }},
      {"model.r", [](const RunConfig& c) { return fmt(c.model.r); },
       [](RunConfig& c, const std::string& v) { c.model.r = to_double(v); }},
      {"model.dt", [](const RunConfig& c) { return fmt(c.model.dt); },
       [](RunConfig& c, const std::string& v) { c.model.dt = to_double(v); }},

      {"simulate.steps", [](const RunConfig& c) { return std::to_string(c.simulate.steps); },
       [](RunConfig& c, const std::string& v) { c.simulate.steps = to_int(v); }},
      {"simulate.v0", [](const RunConfig& c) { return fmt(c.simulate.v0); },
       [](RunConfig& c, const std::string& v) { c.simulate.v0 = to_double(v); }},
      {"simulate.s0", [](const RunConfig& c) { return fmt(c.simulate.s0); },
       [](RunConfig& c, const std::string& v) { c.simulate.s0 = to_double(v); }},
      {"simulate.start_date", [](const RunConfig& c) { return c.simulate.start_date; },
       [](RunConfig& c, const std::string& v) {
         try {
           c.simulate.start_date = format_date(parse_date(v));
         } catch (const Error& e) {
           throw std::invalid_argument(e.what());
         }
       }},

      {"filters.bank", [](const RunConfig& c) { return fmt_bank(c.calibration.switching.bank); },
       [](RunConfig& c, const std::string& v) { c.calibration.switching.bank = to_bank(v); }},
      {"filters.particles", [](const RunConfig& c) { return std::to_string(c.calibration.switching.pf.particles); },
       [](RunConfig& c, const std::string& v) { c.calibration.switching.pf.particles = to_int(v); }},
      {"filters.resample_threshold",
       [](const RunConfig& c) { return fmt(c.calibration.switching.pf.resample_threshold); },
       [](RunConfig& c, const std::string& v) { c.calibration.switching.pf.resample_threshold = to_double(v); }},
      {"filters.prior_window", [](const RunConfig& c) { return std::to_string(c.calibration.switching.prior_window); },
       [](RunConfig& c, const std::string& v) { c.calibration.switching.prior_window = to_int(v); }},

      {"pcrlb.fisher",
       [](const RunConfig& c) {
         return std::string(c.calibration.switching.fisher == FisherForm::Full ? "full" : "additive");
       },
       [](RunConfig& c, const std::string& v) {
         const std::string t = lower(trim(v));
         if (t == "full") {
           c.calibration.switching.fisher = FisherForm::Full;
         } else if (t == "additive") {
           c.calibration.switching.fisher = FisherForm::Additive;
         } else {
           throw std::invalid_argument("expected full or additive, got '" + trim(v) + "'");
         }
       }},

      {"calibration.warmup", [](const RunConfig& c) { return std::to_string(c.calibration.warmup); },
       [](RunConfig& c, const std::string& v) { c.calibration.warmup = to_int(v); }},
      {"calibration.refit_interval", [](const RunConfig& c) { return std::to_string(c.calibration.refit_interval); },
       [](RunConfig& c, const std::string& v) { c.calibration.refit_interval = to_int(v); }},
      {"calibration.fix_rho", [](const RunConfig& c) { return std::string(c.calibration.fix_rho ? "true" : "false"); },
       [](RunConfig& c, const std::string& v) { c.calibration.fix_rho = to_bool(v); }},
      {"calibration.nmle_window", [](const RunConfig& c) { return std::to_string(c.calibration.nmle_window); },
       [](RunConfig& c, const std::string& v) { c.calibration.nmle_window = to_int(v); }},
      {"calibration.init", [](const RunConfig& c) { return std::string(c.init_from_ranges ? "ranges" : "model"); },
       [](RunConfig& c, const std::string& v) {
         const std::string t = lower(trim(v));
         if (t != "ranges" && t != "model") throw std::invalid_argument("expected ranges or model, got '" + trim(v) + "'");
         c.init_from_ranges = t == "ranges";
       }},
      {"calibration.kappa_range", [](const RunConfig& c) { return fmt_range(c.ranges.kappa); },
       [](RunConfig& c, const std::string& v) { c.ranges.kappa = to_range(v); }},
      {"calibration.theta_range", [](const RunConfig& c) { return fmt_range(c.ranges.theta); },
       [](RunConfig& c, const std::string& v) { c.ranges.theta = to_range(v); }},
      {"calibration.sigma_range", [](const RunConfig& c) { return fmt_range(c.ranges.sigma); },
       [](RunConfig& c, const std::string& v) { c.ranges.sigma = to_range(v); }},

      {"report.hist_window", [](const RunConfig& c) { return std::to_string(c.report.hist_window); },
       [](RunConfig& c, const std::string& v) { c.report.hist_window = to_int(v); }},
      {"report.vix_scale", [](const RunConfig& c) { return fmt(c.report.vix_scale); },
       [](RunConfig& c, const std::string& v) { c.report.vix_scale = to_double(v); }},

      {"run.seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) {
         const long long s = to_integer(v);
         if (s < 0) throw std::invalid_argument("seed must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
         c.calibration.switching.seed = c.seed;
       }},
      {"run.out_dir", [](const RunConfig& c) { return c.out_dir; },
       [](RunConfig& c, const std::string& v) { c.out_dir = trim(v); }, false},
  };
  return fields;
}

const Field* find_field(const std::string& key) {
  for (const Field& f : schema())
    if (key == f.key) return &f;
  return nullptr;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> fields)
    : Error(ErrorCode::Config,
            [&] {
              std::string msg = "invalid configuration";
              for (const auto& f : fields) msg += "\n  " + f;
              return msg;
            }()),
      fields_(std::move(fields)) {}

RunConfig default_config() {
  RunConfig c;
  c.calibration.switching.seed = c.seed;
  return c;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError({key + ": unknown key"});
  try {
    f->set(config, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError({key + ": " + e.what()});
  }
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError({key + ": unknown key"});
  return f->get(config);
}

RunConfig load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  RunConfig config = default_config();
  std::vector<std::string> problems;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      problems.push_back(section + ": key outside of a section");
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      try {
        set_config_value(config, full, value.data());
      } catch (const ConfigError& e) {
        problems.insert(problems.end(), e.fields().begin(), e.fields().end());
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  validate_config(config);
  return config;
}

void validate_config(const RunConfig& c) {
  std::vector<std::string> p;
  const ParamReport report = validate_params(c.model);
  for (const auto& v : report.violations) p.push_back("model: " + v);
  if (c.simulate.steps < 1) p.push_back("simulate.steps: must be >= 1");
  if (c.simulate.v0 < 0.0) p.push_back("simulate.v0: must be >= 0 (0 means theta)");
  if (!(c.simulate.s0 > 0.0)) p.push_back("simulate.s0: must be > 0");
  const auto& sw = c.calibration.switching;
  if (sw.pf.particles < 2) p.push_back("filters.particles: must be >= 2");
  if (!(sw.pf.resample_threshold >= 0.0 && sw.pf.resample_threshold <= 1.0)) {
    p.push_back("filters.resample_threshold: must be in [0, 1]");
  }
  if (sw.prior_window < 1) p.push_back("filters.prior_window: must be >= 1");
  if (c.calibration.warmup < 1) p.push_back("calibration.warmup: must be >= 1");
  if (c.calibration.refit_interval < 0) p.push_back("calibration.refit_interval: must be >= 0 (0 disables refits)");
  if (c.calibration.nmle_window < 0 || c.calibration.nmle_window == 1) {
    p.push_back("calibration.nmle_window: must be 0 (expanding) or >= 2");
  }
  const std::pair<const char*, const ParamRange*> ranges[] = {
      {"calibration.kappa_range", &c.ranges.kappa},
      {"calibration.theta_range", &c.ranges.theta},
      {"calibration.sigma_range", &c.ranges.sigma}};
  for (const auto& [name, r] : ranges) {
    if (!(r->lo > 0.0) || !(r->hi >= r->lo)) p.push_back(std::string(name) + ": must satisfy 0 < lo <= hi");
  }
  if (c.report.hist_window < 2) p.push_back("report.hist_window: must be >= 2");
  if (!(c.report.vix_scale > 0.0)) p.push_back("report.vix_scale: must be > 0");
  if (c.out_dir.empty()) p.push_back("run.out_dir: must not be empty");
  if (!p.empty()) throw ConfigError(p);
}

std::string canonical_config(const RunConfig& config) {
  std::string out;
  for (const Field& f : schema()) {
    if (!f.hashed) continue;
    out += f.key;
    out += '=';
    out += f.get(config);
    out += '\n';
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : schema()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace hestoncal
