#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "vprk/experiments.hpp"

using vprk::Matrix;
using vprk::Vector;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::size_t count_char(const std::string& s, char c) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), c));
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("registry") {
    const auto names = vprk::experiment_names();
    CHECK(names.size() == 12);
    for (const char* name : {"midpoint_D", "hlw_gauss2", "srk_on_H", "example1_gauss3", "example2_gauss2",
                             "example3_gauss2", "trapezoidal_measure", "kahan_measure", "kahan_rk_equiv",
                             "kahan_foliation", "classify_all", "foliation_factor"}) {
      CHECK(std::find(names.begin(), names.end(), name) != names.end());
    }
    CHECK(oracle::thrown_kind([] { vprk::run_named("nope"); }) == vprk::ErrorKind::UnknownExperiment);
  }

  TEST_CASE("verdict thresholds") {
    CHECK(vprk::classify_deviation(1e-12, 1e-10, 1e-8) == vprk::Verdict::Preserved);
    CHECK(vprk::classify_deviation(1e-9, 1e-10, 1e-8) == vprk::Verdict::Inconclusive);
    CHECK(vprk::classify_deviation(1e-7, 1e-10, 1e-8) == vprk::Verdict::Violated);
    CHECK(vprk::to_string(vprk::Verdict::Preserved) == "PRESERVED");
    CHECK(vprk::to_string(vprk::Verdict::Violated) == "VIOLATED");
    CHECK(vprk::to_string(vprk::Verdict::Inconclusive) == "INCONCLUSIVE");
  }

  TEST_CASE("CSV layout") {
    const auto report = vprk::run_named("example1_gauss3");
    const auto lines = lines_of(vprk::csv_string(report));
    REQUIRE(lines.size() >= 2);
    CHECK(lines.front() == "step,h,det_phi,abs_dev,density_residual,x0,x1,x2");
    std::size_t rows = 0;
    for (const auto& c : report.cases) rows += c.rows.size();
    CHECK(lines.size() == rows + 1);
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(count_char(lines[i], ',') == 7);
    CHECK(lines[1].rfind("1,0.7,", 0) == 0);

    // Shortest round-trip formatting.
    CHECK(vprk::format_double(0.1) == "0.1");
    CHECK(vprk::format_double(1.0) == "1");
    CHECK(std::stod(vprk::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }

  TEST_CASE("deterministic reruns") {
    for (const char* name : {"midpoint_D", "kahan_measure"}) {
      const auto a = vprk::run_named(name);
      const auto b = vprk::run_named(name);
      CHECK(vprk::csv_string(a) == vprk::csv_string(b));
      CHECK(a.verdict == b.verdict);
    }
    const auto c = vprk::run_named("midpoint_D", {{"seed", 7}});
    CHECK(vprk::csv_string(c) != vprk::csv_string(vprk::run_named("midpoint_D")));
  }

  TEST_CASE("expectations of the registry") {
    const auto mid = vprk::run_named("midpoint_D");
    CHECK(mid.verdict == vprk::Verdict::Preserved);
    CHECK(mid.matches_expectation());
    const auto ex1 = vprk::run_named("example1_gauss3");
    CHECK(ex1.verdict == vprk::Verdict::Violated);
    CHECK(ex1.max_dev > 1e-8);
    for (const auto& check : ex1.checks) CHECK(check.pass);
  }

  TEST_CASE("overrides") {
    const auto r = vprk::run_named("example3_gauss2", {{"method", "midpoint"}});
    CHECK(r.verdict == vprk::Verdict::Preserved);
    REQUIRE(r.expected.has_value());
    CHECK(*r.expected == vprk::Verdict::Preserved);

    const auto zero = vprk::run_named(
        "midpoint_D", {{"field", {{"name", "linear"}, {"params", {{"L", {{0, 0}, {0, 0}}}}}}}, {"h", 0.4}});
    for (const auto& c : zero.cases) {
      for (const auto& row : c.rows) CHECK(row.det_phi == 1.0);
    }

    vprk::ExperimentConfig cfg = vprk::default_config("midpoint_D");
    vprk::apply_overrides(cfg, {{"samples", 2}, {"x0", {0.1, 0.2}}});
    CHECK(cfg.samples == 2);
    REQUIRE(cfg.x0.has_value());
    CHECK((*cfg.x0)(1) == 0.2);
    CHECK(cfg.to_json().at("samples") == 2);
  }

  TEST_CASE("invalid configuration") {
    vprk::ExperimentConfig cfg = vprk::default_config("midpoint_D");
    CHECK(oracle::thrown_kind([&] { vprk::apply_overrides(cfg, {{"colour", 1}}); }) ==
          vprk::ErrorKind::InvalidConfig);
    CHECK(oracle::thrown_kind([&] { vprk::apply_overrides(cfg, nlohmann::json::array()); }) ==
          vprk::ErrorKind::InvalidConfig);
    CHECK(oracle::thrown_kind([] { vprk::run_named("midpoint_D", {{"h", -0.0}}); }) ==
          vprk::ErrorKind::InvalidConfig);
    CHECK(oracle::thrown_kind([] { vprk::run_named("midpoint_D", {{"violate_tol", 1e-12}}); }) ==
          vprk::ErrorKind::InvalidConfig);
    CHECK(oracle::thrown_kind([] { vprk::run_named("midpoint_D", {{"samples", 0}}); }) ==
          vprk::ErrorKind::InvalidConfig);
  }

  TEST_CASE("computation errors are recorded per case") {
    // Midpoint on ẋ = 2x at h = 1: the stage matrix I − (h/2)L vanishes.
    const auto r = vprk::run_named(
        "midpoint_D", {{"field", {{"name", "linear"}, {"params", {{"L", {{2, 0}, {0, 2}}}}}}}, {"h", 1.0}});
    bool any_error = false;
    for (const auto& c : r.cases) any_error = any_error || c.error.has_value();
    CHECK(any_error);
    CHECK(r.to_json().contains("cases"));
  }

  TEST_CASE("seed from the environment") {
    ::setenv("VPRK_SEED", "0x10", 1);
    CHECK(vprk::seed_from_env() == 16u);
    CHECK(vprk::default_config("midpoint_D").seed == 16u);
    ::setenv("VPRK_SEED", "not-a-number", 1);
    CHECK(oracle::thrown_kind([] { vprk::seed_from_env(); }) == vprk::ErrorKind::InvalidConfig);
    ::unsetenv("VPRK_SEED");
    CHECK(!vprk::seed_from_env().has_value());
    CHECK(vprk::default_config("midpoint_D").seed == vprk::kDefaultSeed);
  }
}
