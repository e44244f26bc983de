#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "hestoncal/common.hpp"
#include "hestoncal/market.hpp"

using namespace hestoncal;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "hestoncal_market_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << content;
  return p.string();
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

PriceSeries series_from(const std::vector<double>& closes) {
  PriceSeries s;
  s.closes = closes;
  s.dates = business_days(parse_date("2021-03-01"), closes.size());
  return s;
}

// Risk-neutral expectation of the payoff by Simpson's rule over the normal
// driver of the terminal log price, restricted to the exercise region so the
// integrand is smooth.
double quadrature_price(OptionType type, double spot, double strike, double r, double vol, double tau) {
  const double kink = (std::log(strike / spot) - (r - 0.5 * vol * vol) * tau) / (vol * std::sqrt(tau));
  const double lo = type == OptionType::Call ? kink : -12.0;
  const double hi = type == OptionType::Call ? 12.0 : kink;
  const int n = 20000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double st = spot * std::exp((r - 0.5 * vol * vol) * tau + vol * std::sqrt(tau) * z);
    const double payoff = type == OptionType::Call ? st - strike : strike - st;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * payoff * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI);
  }
  return std::exp(-r * tau) * acc * h / 3.0;
}

}  // namespace

TEST_CASE("dates") {
  CHECK(format_date(parse_date("2007-01-03")) == "2007-01-03");
  CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
  CHECK_THROWS_AS(parse_date("2021-02-29"), Error);
  CHECK_THROWS_AS(parse_date("2021-13-01"), Error);
  CHECK_THROWS_AS(parse_date("03/01/2021"), Error);
  CHECK_THROWS_AS(parse_date("2021-1-01"), Error);

  const auto days = business_days(parse_date("2021-01-01"), 5);  // a Friday
  REQUIRE(days.size() == 5);
  CHECK(format_date(days[0]) == "2021-01-01");
  CHECK(format_date(days[1]) == "2021-01-04");
  CHECK(format_date(days[4]) == "2021-01-07");
  CHECK(format_date(business_days(parse_date("2021-01-02"), 1)[0]) == "2021-01-04");

  CHECK(year_fraction(parse_date("2021-01-01"), parse_date("2022-01-01")) == 1.0);
}

TEST_CASE("price CSV") {
  SUBCASE("well formed") {
    const std::string path = temp_file("ok.csv", "date,close\n2021-01-04,100\n2021-01-05,101.5\n2021-01-06,99\n");
    const PriceSeries s = read_price_csv(path);
    REQUIRE(s.size() == 3);
    const auto y = s.log_ratios();
    CHECK(y[0] == 0.0);
    CHECK(y[2] == doctest::Approx(std::log(0.99)).epsilon(1e-15));
  }
  SUBCASE("comments, blank lines, CRLF") {
    const std::string path = temp_file("crlf.csv", "# config_hash=abc\r\nDate, Close\r\n\r\n2021-01-04, 100\r\n");
    CHECK(read_price_csv(path).size() == 1);
  }
  SUBCASE("diagnostics name the line") {
    const std::string bad = temp_file("bad.csv", "date,close\n2021-01-04,100\n2021-01-05,-3\n");
    CHECK(error_of([&] { read_price_csv(bad); }).find("bad.csv:3:") != std::string::npos);
    const std::string missing = temp_file("missing.csv", "date,close\n2021-01-04,100\n2021-01-05,\n");
    CHECK(error_of([&] { read_price_csv(missing); }).find(":3:") != std::string::npos);
    const std::string dup = temp_file("dup.csv", "date,close\n2021-01-04,100\n2021-01-04,101\n");
    CHECK(error_of([&] { read_price_csv(dup); }).find("duplicate date") != std::string::npos);
    const std::string order = temp_file("order.csv", "date,close\n2021-01-05,100\n2021-01-04,101\n");
    CHECK(error_of([&] { read_price_csv(order); }).find("out of order") != std::string::npos);
    const std::string header = temp_file("header.csv", "day,price\n2021-01-04,100\n");
    CHECK(error_of([&] { read_price_csv(header); }).find("expected header") != std::string::npos);
    const std::string empty = temp_file("empty.csv", "date,close\n");
    CHECK_THROWS_AS(read_price_csv(empty), Error);
    const std::string fields = temp_file("fields.csv", "date,close\n2021-01-04,100,7\n");
    CHECK(error_of([&] { read_price_csv(fields); }).find(":2:") != std::string::npos);
    CHECK_THROWS_AS(read_price_csv("/nonexistent/prices.csv"), Error);
  }
  SUBCASE("round trip is exact") {
    std::mt19937_64 rng(4);
    std::lognormal_distribution<double> d(4.0, 1.0);
    std::vector<double> closes(200);
    for (double& c : closes) c = d(rng);
    const PriceSeries s = series_from(closes);
    const std::string path = temp_file("rt.csv", "");
    write_price_csv(path, s, "0123456789abcdef");
    const PriceSeries back = read_price_csv(path);
    CHECK(back.closes == s.closes);
    CHECK(back.dates == s.dates);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first == "# config_hash=0123456789abcdef");
  }
}

TEST_CASE("reference and option CSV") {
  const std::string vix = temp_file("vix.csv", "date,vol\n2021-01-04,20\n2021-01-05,25.5\n");
  const ReferenceVolSeries v = read_reference_vol_csv(vix, "vix", 100.0);
  CHECK(v.values[1] == doctest::Approx(0.255));
  CHECK(v.label == "vix");

  const std::string track = temp_file("track.csv", "# config_hash=abc\nstep,date,volatility,x\n1,2021-01-04,0.2,9\n2,2021-01-05,0.3,9\n");
  const ReferenceVolSeries t = read_vol_column(track, "volatility", "proposed");
  REQUIRE(t.values.size() == 2);
  CHECK(t.values[1] == 0.3);
  CHECK(format_date(t.dates[0]) == "2021-01-04");
  CHECK(error_of([&] { read_vol_column(track, "vol", "x"); }).find("missing column 'vol'") != std::string::npos);

  const std::string opts = temp_file(
      "opt.csv", "date,expiry,strike,type,mid,underlying\n2021-01-04,2021-03-19,2500,call,100.5,2600\n"
                 "2021-01-05,2021-03-19,2500,P,20,2610\n");
  const auto q = read_option_csv(opts);
  REQUIRE(q.size() == 2);
  CHECK(q[1].type == OptionType::Put);
  CHECK(q[0].strike == 2500);
  const std::string bad = temp_file("opt_bad.csv", "date,expiry,strike,type,mid,underlying\n2021-01-04,2021-01-04,2500,call,1,2600\n");
  CHECK(error_of([&] { read_option_csv(bad); }).find(":2:") != std::string::npos);
}

TEST_CASE("historical volatility") {
  SUBCASE("constant prices") {
    const ReferenceVolSeries v = historical_volatility(series_from(std::vector<double>(40, 50.0)), 30);
    CHECK(v.values.size() == 10);
    for (double x : v.values) CHECK(x == 0.0);
  }
  SUBCASE("alternating returns, window 2") {
    std::vector<double> closes{100.0};
    for (int k = 0; k < 10; ++k) closes.push_back(closes.back() * std::exp(k % 2 ? -0.01 : 0.01));
    const ReferenceVolSeries v = historical_volatility(series_from(closes), 2);
    // Sample std of {0.01, -0.01} is 0.01 * sqrt(2).
    for (double x : v.values) CHECK(x == doctest::Approx(0.01 * std::sqrt(2.0) * std::sqrt(252.0)).epsilon(1e-12));
    CHECK(v.dates.front() == series_from(closes).dates[2]);
  }
  SUBCASE("brute-force recomputation") {
    std::mt19937_64 rng(50);
    std::normal_distribution<double> n(0.0, 0.02);
    std::vector<double> closes{1000.0};
    for (int k = 1; k < 50; ++k) closes.push_back(closes.back() * std::exp(n(rng)));
    const int w = 10;
    const ReferenceVolSeries v = historical_volatility(series_from(closes), w);
    REQUIRE(v.values.size() == 50 - 1 - w + 1);
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      // Welford over the window.
      long double mean = 0, m2 = 0;
      for (int j = 0; j < w; ++j) {
        const std::size_t k = i + static_cast<std::size_t>(j) + 1;
        const long double r = std::log(static_cast<long double>(closes[k]) / closes[k - 1]);
        const long double delta = r - mean;
        mean += delta / (j + 1);
        m2 += delta * (r - mean);
      }
      const double ref = static_cast<double>(std::sqrt(m2 / (w - 1)) * std::sqrt(252.0L));
      CHECK(std::abs(v.values[i] - ref) < 1e-10);
    }
  }
  CHECK_THROWS_AS(historical_volatility(series_from({1, 2, 3}), 3), Error);
  CHECK_THROWS_AS(historical_volatility(series_from({1, 2, 3}), 1), Error);
}

TEST_CASE("Black-Scholes") {
  CHECK(black_scholes_price(OptionType::Call, 100, 90, 0.05, 0.0, 1.0) ==
        doctest::Approx(100 - 90 * std::exp(-0.05)).epsilon(1e-15));
  CHECK(black_scholes_price(OptionType::Call, 80, 90, 0.05, 0.0, 1.0) == 0.0);
  CHECK(black_scholes_price(OptionType::Call, 100, 90, 0.05, 1e-9, 1.0) ==
        doctest::Approx(100 - 90 * std::exp(-0.05)).epsilon(1e-12));

  CHECK(std::abs(black_scholes_price(OptionType::Call, 100, 100, 0.0, 0.3, 0.5) -
                 black_scholes_price(OptionType::Put, 100, 100, 0.0, 0.3, 0.5)) < 1e-12);

  for (double strike : {80.0, 100.0, 125.0}) {
    const double c = black_scholes_price(OptionType::Call, 100, strike, 0.05, 0.2, 1.0);
    const double p = black_scholes_price(OptionType::Put, 100, strike, 0.05, 0.2, 1.0);
    CHECK(c - p == doctest::Approx(100 - strike * std::exp(-0.05)).epsilon(1e-12));
    CHECK(c == doctest::Approx(quadrature_price(OptionType::Call, 100, strike, 0.05, 0.2, 1.0)).epsilon(1e-9));
    CHECK(p == doctest::Approx(quadrature_price(OptionType::Put, 100, strike, 0.05, 0.2, 1.0)).epsilon(1e-9));
  }
  CHECK(black_scholes_price(OptionType::Call, 100, 100, 0.05, 0.2, 1.0) == doctest::Approx(10.450583572185565).epsilon(1e-12));

  CHECK_THROWS_AS(black_scholes_price(OptionType::Call, 0, 100, 0.05, 0.2, 1.0), Error);
  CHECK_THROWS_AS(black_scholes_price(OptionType::Call, 100, 100, 0.05, 0.2, 0.0), Error);
  CHECK_THROWS_AS(black_scholes_price(OptionType::Call, 100, 100, 0.05, -0.2, 1.0), Error);
}

TEST_CASE("RMSE") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(rmse(a, a) == 0.0);
  const std::vector<double> b{1.5, 2.5, 3.5, 4.5};
  CHECK(rmse(b, a) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1}), Error);

  ReferenceVolSeries est{business_days(parse_date("2021-01-04"), 5), {0.1, 0.2, 0.3, 0.4, 0.5}, "est"};
  ReferenceVolSeries ref{business_days(parse_date("2021-01-06"), 5), {0.35, 0.45, 0.55, 0.6, 0.7}, "ref"};
  const JoinedRmse j = joined_rmse(est, ref);
  CHECK(j.overlap == 3);
  CHECK(j.rmse == doctest::Approx(0.05).epsilon(1e-14));
  ReferenceVolSeries far{business_days(parse_date("2030-01-01"), 2), {0.1, 0.1}, "far"};
  CHECK_THROWS_AS(joined_rmse(est, far), Error);

  SUBCASE("options priced at the quoted volatility") {
    const auto days = business_days(parse_date("2021-01-04"), 3);
    ReferenceVolSeries vols{days, {0.2, 0.25, 0.3}, "flat"};
    std::vector<OptionQuote> quotes;
    for (std::size_t i = 0; i < days.size(); ++i) {
      OptionQuote q;
      q.date = days[i];
      q.expiry = days[i] + std::chrono::days{60};
      q.strike = 2500;
      q.underlying = 2400 + 50.0 * static_cast<double>(i);
      q.mid = black_scholes_price(OptionType::Call, q.underlying, q.strike, 0.01, vols.values[i], 60.0 / 365.0);
      quotes.push_back(q);
    }
    const OptionRmse exact = option_rmse(quotes, vols, 0.01);
    CHECK(exact.quotes == 3);
    CHECK(exact.rmse < 1e-12);
    for (auto& q : quotes) q.mid += 2.0;
    const OptionRmse off = option_rmse(quotes, vols, 0.01);
    CHECK(off.rmse == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(off.rmse_normalized > 0.0);
    CHECK_THROWS_AS(option_rmse(quotes, far, 0.01), Error);
  }
}
