#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hestoncal/config.hpp"

using namespace hestoncal;
namespace fs = std::filesystem;

namespace {

std::string ini(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "hestoncal_config_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << content;
  return p.string();
}

std::vector<std::string> problems(const std::string& path) {
  try {
    load_config(path);
  } catch (const ConfigError& e) {
    return e.fields();
  }
  return {};
}

}  // namespace

TEST_CASE("defaults") {
  const RunConfig c = default_config();
  CHECK(c.model.kappa == 10.8);
  CHECK(c.model.dt == 1.0 / 252.0);
  CHECK(c.calibration.warmup == 100);
  CHECK(c.calibration.refit_interval == 20);
  CHECK(c.calibration.fix_rho);
  CHECK(c.calibration.switching.pf.particles == 1000);
  CHECK(c.calibration.switching.fisher == FisherForm::Full);
  CHECK(c.ranges.kappa.lo == 1.0);
  CHECK(c.ranges.sigma.hi == 3.0);
  CHECK(c.report.hist_window == 30);
  CHECK_NOTHROW(validate_config(c));
  CHECK(config_keys().size() == 27);
}

TEST_CASE("load_config") {
  const std::string path = ini("ok.ini",
                               "; comment\n[model]\nkappa = 5\ndt = 1/252\nrho=0.5\n"
                               "[filters]\nbank = ekf, pf\nparticles = 300\n"
                               "[pcrlb]\nfisher = additive\n"
                               "[calibration]\nfix_rho = false\nkappa_range = 2, 8\n"
                               "[run]\nseed = 7\n");
  const RunConfig c = load_config(path);
  CHECK(c.model.kappa == 5.0);
  CHECK(c.model.dt == 1.0 / 252.0);
  CHECK(c.model.rho == 0.5);
  CHECK(c.calibration.switching.bank == std::vector<FilterKind>{FilterKind::Ekf, FilterKind::Pf});
  CHECK(c.calibration.switching.pf.particles == 300);
  CHECK(c.calibration.switching.fisher == FisherForm::Additive);
  CHECK_FALSE(c.calibration.fix_rho);
  CHECK(c.ranges.kappa.lo == 2.0);
  CHECK(c.ranges.kappa.hi == 8.0);
  CHECK(c.seed == 7);
  CHECK(c.calibration.switching.seed == 7);
  CHECK(c.model.theta == 0.23);
}

TEST_CASE("field-level diagnostics") {
  const auto p = problems(ini("bad.ini",
                              "[model]\nkappa = abc\nrho = 3\n[filters]\nbank = ekf,kf\n"
                              "[nope]\nx = 1\n[calibration]\nwarmup = 5\nsurprise = 1\n"));
  REQUIRE(p.size() == 4);
  CHECK(p[0].rfind("model.kappa:", 0) == 0);
  CHECK(p[1].rfind("filters.bank:", 0) == 0);
  CHECK(p[2] == "nope.x: unknown key");
  CHECK(p[3] == "calibration.surprise: unknown key");

  const auto range = problems(ini("range.ini", "[model]\nrho = 3\n[filters]\nparticles = 1\n"));
  REQUIRE(range.size() == 2);
  CHECK(range[0].rfind("model:", 0) == 0);
  CHECK(range[1].rfind("filters.particles:", 0) == 0);

  CHECK_THROWS_AS(load_config(ini("div.ini", "[model]\ndt = 1/0\n")), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), Error);
}

TEST_CASE("overrides and hash") {
  RunConfig c = default_config();
  const std::string h0 = config_hash(c);
  CHECK(h0.size() == 16);
  CHECK(config_hash(default_config()) == h0);

  set_config_value(c, "run.out_dir", "elsewhere");
  CHECK(config_hash(c) == h0);

  set_config_value(c, "filters.particles", "500");
  CHECK(c.calibration.switching.pf.particles == 500);
  CHECK(config_hash(c) != h0);
  CHECK(canonical_config(c).find("filters.particles=500\n") != std::string::npos);
  CHECK(get_config_value(c, "filters.particles") == "500");
  CHECK(get_config_value(c, "run.out_dir") == "elsewhere");
  CHECK_THROWS_AS(get_config_value(c, "run.nothing"), ConfigError);

  CHECK_THROWS_AS(set_config_value(c, "filters.nothing", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "calibration.fix_rho", "maybe"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "run.seed", "-1"), ConfigError);

  // Canonical form round-trips through the setters.
  set_config_value(c, "model.dt", "1/365");
  RunConfig d = default_config();
  std::istringstream lines(canonical_config(c));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    set_config_value(d, line.substr(0, eq), line.substr(eq + 1));
  }
  CHECK(config_hash(d) == config_hash(c));
}
