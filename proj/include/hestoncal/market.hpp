#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hestoncal {

/// Parses YYYY-MM-DD. Throws Parse on malformed or impossible dates.
std::chrono::sys_days parse_date(std::string_view text);
std::string format_date(std::chrono::sys_days day);

/// `count` consecutive weekdays starting at `first` (moved forward to a weekday).
std::vector<std::chrono::sys_days> business_days(std::chrono::sys_days first, std::size_t count);

struct PriceSeries {
  std::vector<std::chrono::sys_days> dates;
  std::vector<double> closes;

  std::size_t size() const { return closes.size(); }
  /// y_k = log(S_k / S_0).
  std::vector<double> log_ratios() const;
};

/// Strictly increasing dates and positive finite closes.
void validate_prices(const PriceSeries& s);

/// `date,close` with a header row. Lines starting with '#' and blank lines are
/// skipped. Errors name the offending line.
PriceSeries read_price_csv(const std::string& path);

/// Writes `# config_hash=<hash>` (when non-empty), the header, and closes
/// with 17 significant digits so a re-read is exact.
void write_price_csv(const std::string& path, const PriceSeries& s, const std::string& config_hash = {});

struct ReferenceVolSeries {
  std::vector<std::chrono::sys_days> dates;
  std::vector<double> values;  // annualized volatility
  std::string label;
};

/// `date,vol`; every value is divided by `scale` (100 for VIX quotes).
ReferenceVolSeries read_reference_vol_csv(const std::string& path, const std::string& label, double scale = 1.0);

/// The `date` column and a named value column of any CSV with a header row.
ReferenceVolSeries read_vol_column(const std::string& path, const std::string& column, const std::string& label,
                                   double scale = 1.0);

/// Rolling sample standard deviation of the last `window` log returns,
/// annualized by sqrt(252). Entry i is dated at dates[window + i].
ReferenceVolSeries historical_volatility(const PriceSeries& s, int window);

enum class OptionType { Call, Put };

struct OptionQuote {
  std::chrono::sys_days date;
  std::chrono::sys_days expiry;
  double strike = 0.0;
  OptionType type = OptionType::Call;
  double mid = 0.0;
  double underlying = 0.0;
};

/// `date,expiry,strike,type,mid,underlying`; type is call/put (or c/p).
std::vector<OptionQuote> read_option_csv(const std::string& path);

double black_scholes_price(OptionType type, double spot, double strike, double r, double vol, double tau);

/// Year fraction in calendar days / 365.
double year_fraction(std::chrono::sys_days from, std::chrono::sys_days to);

double rmse(std::span<const double> model, std::span<const double> reference);

/// RMSE over the dates present in both series.
struct JoinedRmse {
  double rmse = 0.0;
  std::size_t overlap = 0;
};
JoinedRmse joined_rmse(const ReferenceVolSeries& estimate, const ReferenceVolSeries& reference);

struct OptionRmse {
  std::string label;
  std::size_t quotes = 0;
  double rmse = 0.0;             // option prices
  double rmse_normalized = 0.0;  // prices divided by the underlying close
};

/// Prices every quote whose date has a volatility in `vols` with
/// Black-Scholes at rate r and compares with the quoted mid.
OptionRmse option_rmse(const std::vector<OptionQuote>& quotes, const ReferenceVolSeries& vols, double r);

}  // namespace hestoncal
