#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vprk/measure.hpp"
#include "vprk/random.hpp"

namespace vprk {

enum class Verdict { Preserved, Violated, Inconclusive };

std::string to_string(Verdict verdict);

/// Settings of one named experiment. Unset optionals take the registry
/// defaults of that experiment.
struct ExperimentConfig {
  std::string name;
  /// Field descriptor as accepted by field_from_json; null for the default.
  nlohmann::json field;
  std::string method;
  std::optional<double> h;
  std::vector<double> h_grid;
  std::optional<Vector> x0;
  std::optional<std::size_t> n_steps;
  std::size_t samples = 5;
  std::uint64_t seed = kDefaultSeed;
  double preserve_tol = 1e-10;
  double violate_tol = 1e-8;

  /// Throws InvalidConfig.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Applies a flat JSON object of overrides. Unknown keys are an error.
void apply_overrides(ExperimentConfig& config, const nlohmann::json& overrides);

/// Reads VPRK_SEED (decimal or 0x-prefixed hex) when set.
std::optional<std::uint64_t> seed_from_env();

struct StepRow {
  std::size_t step = 0;
  double h = 0.0;
  double det_phi = 1.0;
  double abs_dev = 0.0;
  double density_residual = 0.0;
  Vector x;
};

struct CaseReport {
  std::string label;
  std::optional<Verdict> expected;
  /// "abs_dev" or "density_residual": the column the verdict is taken from.
  std::string metric = "abs_dev";
  std::vector<StepRow> rows;
  double max_dev = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<std::string> error;

  bool matches() const { return !expected || *expected == verdict; }
};

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CaseReport> cases;
  std::vector<CheckResult> checks;
  /// Taken over the cases sharing the first case's expectation.
  double max_dev = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<Verdict> expected;
  double wall_time_s = 0.0;

  bool matches_expectation() const;
  nlohmann::json to_json() const;
};

Verdict classify_deviation(double dev, double preserve_tol, double violate_tol);

std::vector<std::string> experiment_names();
/// Default configuration of a registry entry, with VPRK_SEED applied.
ExperimentConfig default_config(const std::string& name);

/// Throws UnknownExperiment; computation errors inside a case are recorded in
/// that case and make its verdict INCONCLUSIVE.
ExperimentReport run_named(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object());
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Header `step,h,det_phi,abs_dev,density_residual,x0,…` and one row per step
/// of every case; floats in shortest round-trip form. Throws IoError.
void emit_csv(const ExperimentReport& report, const std::filesystem::path& path);
std::string csv_string(const ExperimentReport& report);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

}  // namespace vprk
