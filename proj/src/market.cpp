#include "hestoncal/market.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "hestoncal/common.hpp"

namespace hestoncal {

namespace chr = std::chrono;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

double parse_number(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::Parse, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

// Reads a CSV with the expected header. `row` receives the fields of every
// data line together with its 1-based line number.
template <typename Row>
void read_csv(const std::string& path, const std::vector<std::string>& header, Row&& row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::vector<std::string_view> fields = split(t);
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (!seen_header) {
      seen_header = true;
      bool match = fields.size() == header.size();
      for (std::size_t i = 0; match && i < header.size(); ++i) match = lower(fields[i]) == header[i];
      if (!match) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw Error(ErrorCode::Parse, where + "expected header '" + want + "'");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::Parse, where + "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    try {
      row(fields, line_no);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  if (!seen_header) throw Error(ErrorCode::Parse, path + ": empty file");
}

// Like read_csv, but the header may hold any columns; `row` receives the
// fields at the positions of `wanted`.
template <typename Row>
void read_csv_columns(const std::string& path, const std::vector<std::string>& wanted, Row&& row) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> index;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::vector<std::string_view> fields = split(t);
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (width == 0) {
      width = fields.size();
      for (const auto& w : wanted) {
        std::size_t i = 0;
        while (i < fields.size() && lower(fields[i]) != w) ++i;
        if (i == fields.size()) throw Error(ErrorCode::Parse, where + "missing column '" + w + "'");
        index.push_back(i);
      }
      continue;
    }
    if (fields.size() != width) {
      throw Error(ErrorCode::Parse, where + "expected " + std::to_string(width) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    std::vector<std::string_view> picked;
    for (std::size_t i : index) picked.push_back(fields[i]);
    try {
      row(picked, line_no);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
  }
  if (width == 0) throw Error(ErrorCode::Parse, path + ": empty file");
}

void require_increasing(const std::vector<chr::sys_days>& dates, const std::vector<std::size_t>& lines,
                        const std::string& path) {
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (dates[i] == dates[i - 1]) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(lines[i]) + ": duplicate date " + format_date(dates[i]));
    }
    if (dates[i] < dates[i - 1]) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(lines[i]) + ": dates out of order");
    }
  }
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

chr::sys_days parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  const bool shape = text.size() == 10 && text[4] == '-' && text[7] == '-';
  const auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc() && ptr == text.data() + pos + len;
  };
  if (!shape || !num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) {
    throw Error(ErrorCode::Parse, "invalid date '" + std::string(text) + "'");
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw Error(ErrorCode::Parse, "invalid date '" + std::string(text) + "'");
  return chr::sys_days{ymd};
}

std::string format_date(chr::sys_days day) {
  const chr::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::vector<chr::sys_days> business_days(chr::sys_days first, std::size_t count) {
  std::vector<chr::sys_days> out;
  out.reserve(count);
  chr::sys_days d = first;
  while (out.size() < count) {
    const chr::weekday wd{d};
    if (wd != chr::Saturday && wd != chr::Sunday) out.push_back(d);
    d += chr::days{1};
  }
  return out;
}

std::vector<double> PriceSeries::log_ratios() const {
  std::vector<double> y(closes.size());
  for (std::size_t k = 0; k < closes.size(); ++k) y[k] = k == 0 ? 0.0 : std::log(closes[k] / closes[0]);
  return y;
}

void validate_prices(const PriceSeries& s) {
  if (s.closes.empty()) throw Error(ErrorCode::InvalidArgument, "empty price series");
  if (s.dates.size() != s.closes.size()) throw Error(ErrorCode::InvalidArgument, "dates and closes differ in length");
  for (std::size_t i = 0; i < s.closes.size(); ++i) {
    if (!(s.closes[i] > 0.0) || !std::isfinite(s.closes[i])) {
      throw Error(ErrorCode::InvalidArgument, "close must be positive at row " + std::to_string(i));
    }
    if (i > 0 && !(s.dates[i] > s.dates[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "dates must be strictly increasing at row " + std::to_string(i));
    }
  }
}

PriceSeries read_price_csv(const std::string& path) {
  PriceSeries s;
  std::vector<std::size_t> lines;
  read_csv(path, {"date", "close"}, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const chr::sys_days d = parse_date(f[0]);
    if (f[1].empty()) throw Error(ErrorCode::Parse, "missing close");
    const double c = parse_number(f[1]);
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::Parse, "close must be positive, got " + std::string(f[1]));
    s.dates.push_back(d);
    s.closes.push_back(c);
    lines.push_back(line);
  });
  if (s.closes.empty()) throw Error(ErrorCode::Parse, path + ": no price rows");
  require_increasing(s.dates, lines, path);
  return s;
}

void write_price_csv(const std::string& path, const PriceSeries& s, const std::string& config_hash) {
  validate_prices(s);
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  if (!config_hash.empty()) std::fprintf(f, "# config_hash=%s\n", config_hash.c_str());
  std::fprintf(f, "date,close\n");
  for (std::size_t i = 0; i < s.size(); ++i) std::fprintf(f, "%s,%.17g\n", format_date(s.dates[i]).c_str(), s.closes[i]);
  if (std::fclose(f) != 0) throw Error(ErrorCode::Io, "cannot write " + path);
}

ReferenceVolSeries read_reference_vol_csv(const std::string& path, const std::string& label, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "volatility scale must be > 0");
  ReferenceVolSeries s;
  s.label = label;
  std::vector<std::size_t> lines;
  read_csv(path, {"date", "vol"}, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const chr::sys_days d = parse_date(f[0]);
    const double v = parse_number(f[1]);
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::Parse, "volatility must be >= 0");
    s.dates.push_back(d);
    s.values.push_back(v / scale);
    lines.push_back(line);
  });
  require_increasing(s.dates, lines, path);
  return s;
}

ReferenceVolSeries read_vol_column(const std::string& path, const std::string& column, const std::string& label,
                                   double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "volatility scale must be > 0");
  ReferenceVolSeries s;
  s.label = label;
  std::vector<std::size_t> lines;
  read_csv_columns(path, {"date", lower(column)}, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const chr::sys_days d = parse_date(f[0]);
    const double v = parse_number(f[1]);
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::Parse, "volatility must be >= 0");
    s.dates.push_back(d);
    s.values.push_back(v / scale);
    lines.push_back(line);
  });
  require_increasing(s.dates, lines, path);
  return s;
}

ReferenceVolSeries historical_volatility(const PriceSeries& s, int window) {
  if (window < 2) throw Error(ErrorCode::InvalidArgument, "window must be >= 2");
  const std::size_t w = static_cast<std::size_t>(window);
  if (s.size() <= w) throw Error(ErrorCode::InvalidArgument, "series shorter than the volatility window");
  std::vector<double> r(s.size() - 1);
  for (std::size_t k = 1; k < s.size(); ++k) r[k - 1] = std::log(s.closes[k] / s.closes[k - 1]);

  ReferenceVolSeries out;
  out.label = "historical";
  const double annual = std::sqrt(252.0);
  for (std::size_t end = w; end <= r.size(); ++end) {
    double mean = 0.0;
    for (std::size_t i = end - w; i < end; ++i) mean += r[i];
    mean /= static_cast<double>(w);
    double ss = 0.0;
    for (std::size_t i = end - w; i < end; ++i) ss += (r[i] - mean) * (r[i] - mean);
    out.values.push_back(std::sqrt(ss / static_cast<double>(w - 1)) * annual);
    out.dates.push_back(s.dates[end]);
  }
  return out;
}

std::vector<OptionQuote> read_option_csv(const std::string& path) {
  std::vector<OptionQuote> out;
  read_csv(path, {"date", "expiry", "strike", "type", "mid", "underlying"},
           [&](const std::vector<std::string_view>& f, std::size_t) {
             OptionQuote q;
             q.date = parse_date(f[0]);
             q.expiry = parse_date(f[1]);
             q.strike = parse_number(f[2]);
             const std::string type = lower(f[3]);
             if (type == "call" || type == "c") {
               q.type = OptionType::Call;
             } else if (type == "put" || type == "p") {
               q.type = OptionType::Put;
             } else {
               throw Error(ErrorCode::Parse, "option type must be call or put");
             }
             q.mid = parse_number(f[4]);
             q.underlying = parse_number(f[5]);
             if (!(q.strike > 0.0)) throw Error(ErrorCode::Parse, "strike must be > 0");
             if (!(q.mid >= 0.0)) throw Error(ErrorCode::Parse, "mid must be >= 0");
             if (!(q.underlying > 0.0)) throw Error(ErrorCode::Parse, "underlying must be > 0");
             if (!(q.expiry > q.date)) throw Error(ErrorCode::Parse, "expiry must be after the quote date");
             out.push_back(q);
           });
  return out;
}

double black_scholes_price(OptionType type, double spot, double strike, double r, double vol, double tau) {
  if (!(spot > 0.0) || !(strike > 0.0) || !(tau > 0.0) || !(vol >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "Black-Scholes inputs out of domain");
  }
  const double disc = std::exp(-r * tau);
  const double fwd_strike = strike * disc;
  const double sd = vol * std::sqrt(tau);
  if (sd == 0.0) {
    return type == OptionType::Call ? std::max(spot - fwd_strike, 0.0) : std::max(fwd_strike - spot, 0.0);
  }
  const double d1 = (std::log(spot / strike) + (r + 0.5 * vol * vol) * tau) / sd;
  const double d2 = d1 - sd;
  if (type == OptionType::Call) return spot * norm_cdf(d1) - fwd_strike * norm_cdf(d2);
  return fwd_strike * norm_cdf(-d2) - spot * norm_cdf(-d1);
}

double year_fraction(chr::sys_days from, chr::sys_days to) {
  return static_cast<double>((to - from).count()) / 365.0;
}

double rmse(std::span<const double> model, std::span<const double> reference) {
  if (model.size() != reference.size()) throw Error(ErrorCode::InvalidArgument, "series differ in length");
  if (model.empty()) throw Error(ErrorCode::InvalidArgument, "empty overlap");
  CompensatedSum ss;
  for (std::size_t i = 0; i < model.size(); ++i) ss.add((model[i] - reference[i]) * (model[i] - reference[i]));
  return std::sqrt(ss.value() / static_cast<double>(model.size()));
}

JoinedRmse joined_rmse(const ReferenceVolSeries& estimate, const ReferenceVolSeries& reference) {
  std::map<chr::sys_days, double> ref;
  for (std::size_t i = 0; i < reference.dates.size(); ++i) ref[reference.dates[i]] = reference.values[i];
  std::vector<double> a, b;
  for (std::size_t i = 0; i < estimate.dates.size(); ++i) {
    const auto it = ref.find(estimate.dates[i]);
    if (it == ref.end()) continue;
    a.push_back(estimate.values[i]);
    b.push_back(it->second);
  }
  if (a.empty()) throw Error(ErrorCode::InvalidArgument, "empty overlap between " + estimate.label + " and " + reference.label);
  return JoinedRmse{rmse(a, b), a.size()};
}

OptionRmse option_rmse(const std::vector<OptionQuote>& quotes, const ReferenceVolSeries& vols, double r) {
  std::map<chr::sys_days, double> by_date;
  for (std::size_t i = 0; i < vols.dates.size(); ++i) by_date[vols.dates[i]] = vols.values[i];
  std::vector<double> model, market, model_n, market_n;
  for (const OptionQuote& q : quotes) {
    const auto it = by_date.find(q.date);
    if (it == by_date.end()) continue;
    const double price = black_scholes_price(q.type, q.underlying, q.strike, r, it->second, year_fraction(q.date, q.expiry));
    model.push_back(price);
    market.push_back(q.mid);
    model_n.push_back(price / q.underlying);
    market_n.push_back(q.mid / q.underlying);
  }
  if (model.empty()) throw Error(ErrorCode::InvalidArgument, "empty overlap between options and " + vols.label);
  OptionRmse out;
  out.label = vols.label;
  out.quotes = model.size();
  out.rmse = rmse(model, market);
  out.rmse_normalized = rmse(model_n, market_n);
  return out;
}

}  // namespace hestoncal
