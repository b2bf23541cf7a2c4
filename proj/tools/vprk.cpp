// Command-line front end: run named experiments, classify fields, take single steps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vprk/classify.hpp"
#include "vprk/experiments.hpp"

namespace {

using nlohmann::json;

json parse_field_arg(const std::string& text) {
  const json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) return text;  // a bare builtin name
  return parsed;
}

vprk::Vector parse_csv_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      vprk::raise(vprk::ErrorKind::BadParams, "x0 entry is not a number: '" + item + "'");
    }
  }
  if (values.empty()) vprk::raise(vprk::ErrorKind::BadParams, "x0 is empty");
  return Eigen::Map<const vprk::Vector>(values.data(), static_cast<vprk::Index>(values.size()));
}

json to_json(const vprk::Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int cmd_run(const std::string& name, const std::string& config_path, const std::string& csv_path, bool as_json) {
  json overrides = json::object();
  if (!config_path.empty()) {
    std::ifstream file(config_path);
    if (!file) vprk::raise(vprk::ErrorKind::IoError, "cannot read " + config_path);
    overrides = json::parse(file, nullptr, false);
    if (overrides.is_discarded()) vprk::raise(vprk::ErrorKind::InvalidConfig, config_path + " is not valid JSON");
  }
  const vprk::ExperimentReport report = vprk::run_named(name, overrides);
  if (!csv_path.empty()) vprk::emit_csv(report, csv_path);

  if (as_json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    std::cout << name << ": verdict " << vprk::to_string(report.verdict);
    if (report.expected) std::cout << " (expected " << vprk::to_string(*report.expected) << ")";
    std::cout << ", max dev " << vprk::format_double(report.max_dev) << ", seed " << report.config.seed << '\n';
    for (const auto& c : report.cases) {
      std::cout << "  case  " << (c.matches() ? "ok  " : "FAIL") << "  " << c.label << "  "
                << vprk::to_string(c.verdict) << "  " << c.metric << "=" << vprk::format_double(c.max_dev);
      if (c.error) std::cout << "  error: " << *c.error;
      std::cout << '\n';
    }
    for (const auto& c : report.checks) {
      std::cout << "  check " << (c.pass ? "ok  " : "FAIL") << "  " << c.name << "  "
                << vprk::format_double(c.value);
      if (!c.detail.empty()) std::cout << "  " << c.detail;
      std::cout << '\n';
    }
  }
  return report.matches_expectation() ? 0 : 1;
}

int cmd_classify(const std::string& field_text, std::uint64_t seed, std::size_t samples) {
  const vprk::VectorField field = vprk::field_from_json(parse_field_arg(field_text));
  if (auto env = vprk::seed_from_env()) seed = *env;
  const vprk::ClassReport report = vprk::classify(field, vprk::default_classify_config(field.dim(), seed, samples));
  std::cout << vprk::to_json(report).dump(2) << '\n';
  return 0;
}

int cmd_step(const std::string& field_text, const std::string& method_text, double h, const std::string& x0_text,
             const std::string& density_kind) {
  const vprk::VectorField field = vprk::field_from_json(parse_field_arg(field_text));
  const vprk::Method method = vprk::method_from_name(method_text);
  const vprk::Vector x0 = parse_csv_vector(x0_text);
  const vprk::MethodStep s = vprk::step(field, method, h, x0);
  const double det_phi = vprk::method_det(field, method, s);

  json out;
  out["field"] = field.name();
  out["method"] = vprk::method_name(method);
  out["h"] = h;
  out["x0"] = to_json(x0);
  out["x_next"] = to_json(s.x_next);
  out["det_phi"] = det_phi;
  out["abs_dev"] = std::abs(det_phi - 1.0);
  if (!density_kind.empty()) {
    const vprk::DensitySpec density = vprk::DensitySpec::from_name(density_kind, field, h);
    out["density"] = density_kind;
    out["density_residual"] = vprk::measure_residual(density, h, x0, s.x_next, det_phi);
  }
  json stages = json::array();
  for (const auto& part : s.parts) {
    if (!part.stage_lin) continue;
    json ks = json::array();
    for (const auto& k : part.stage_lin->stages) ks.push_back(to_json(k));
    stages.push_back(std::move(ks));
  }
  out["stages"] = std::move(stages);
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume- and measure-preservation experiments for Runge-Kutta and Kahan integrators"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a named experiment; exit 0 iff it matches its expectation");
  std::string run_name;
  std::string config_path;
  std::string csv_path;
  bool as_json = false;
  run->add_option("name", run_name, "Experiment name (see `vprk list`)")->required();
  run->add_option("--config", config_path, "Flat JSON object overriding the experiment configuration");
  run->add_option("--csv", csv_path, "Write per-step rows to this CSV file");
  run->add_flag("--json", as_json, "Print the full report as JSON");

  auto* list = app.add_subcommand("list", "List experiment names");

  auto* classify = app.add_subcommand("classify", "Report class membership checks for a field");
  std::string classify_field;
  std::uint64_t classify_seed = vprk::kDefaultSeed;
  std::size_t classify_samples = 20;
  classify->add_option("--field", classify_field, "Builtin name or {\"name\":…,\"params\":{…}}")->required();
  classify->add_option("--seed", classify_seed, "Sample seed");
  classify->add_option("--samples", classify_samples, "Number of sample points")->check(CLI::PositiveNumber);

  auto* step = app.add_subcommand("step", "Take one step and report its Jacobian determinant");
  step->set_help_flag("--help", "Print this help message and exit");
  std::string step_field;
  std::string step_method;
  double step_h = 0.0;
  std::string step_x0;
  std::string step_density;
  step->add_option("--field", step_field, "Builtin name or {\"name\":…,\"params\":{…}}")->required();
  step->add_option("--method", step_method, "midpoint|trapezoidal|gauss2|gauss3|kahan|kahan_rk|a*b")->required();
  step->add_option("--h", step_h, "Step size")->required();
  step->add_option("--x0", step_x0, "Comma-separated initial point")->required();
  step->add_option("--density", step_density, "unit|trapezoidal_plus|trapezoidal_minus|kahan_plus|kahan_minus");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_name, config_path, csv_path, as_json);
    if (list->parsed()) {
      for (const auto& name : vprk::experiment_names()) std::cout << name << '\n';
      return 0;
    }
    if (classify->parsed()) return cmd_classify(classify_field, classify_seed, classify_samples);
    if (step->parsed()) return cmd_step(step_field, step_method, step_h, step_x0, step_density);
  } catch (const vprk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
