#include "vprk/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "vprk/classify.hpp"

namespace vprk {

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Preserved: return "PRESERVED";
    case Verdict::Violated: return "VIOLATED";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

Verdict classify_deviation(double dev, double preserve_tol, double violate_tol) {
  if (!std::isfinite(dev)) return Verdict::Inconclusive;
  if (dev <= preserve_tol) return Verdict::Preserved;
  if (dev >= violate_tol) return Verdict::Violated;
  return Verdict::Inconclusive;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

// --- Configuration -------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (!(preserve_tol > 0.0) || !(violate_tol > 0.0)) raise(ErrorKind::InvalidConfig, "tolerances must be positive");
  if (!(preserve_tol < violate_tol)) raise(ErrorKind::InvalidConfig, "preserve_tol must be below violate_tol");
  if (h && (!std::isfinite(*h) || *h == 0.0)) raise(ErrorKind::InvalidConfig, "h must be finite and nonzero");
  for (double v : h_grid) {
    if (!std::isfinite(v) || v == 0.0) raise(ErrorKind::InvalidConfig, "h_grid entries must be finite and nonzero");
  }
  if (n_steps && *n_steps == 0) raise(ErrorKind::InvalidConfig, "n_steps must be positive");
  if (samples == 0) raise(ErrorKind::InvalidConfig, "samples must be positive");
  if (x0 && !x0->allFinite()) raise(ErrorKind::InvalidConfig, "x0 must be finite");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["field"] = field;
  j["method"] = method;
  j["h"] = h ? nlohmann::json(*h) : nlohmann::json();
  j["h_grid"] = h_grid;
  j["x0"] = x0 ? nlohmann::json(std::vector<double>(x0->data(), x0->data() + x0->size())) : nlohmann::json();
  j["n_steps"] = n_steps ? nlohmann::json(*n_steps) : nlohmann::json();
  j["samples"] = samples;
  j["seed"] = seed;
  j["preserve_tol"] = preserve_tol;
  j["violate_tol"] = violate_tol;
  return j;
}

namespace {

std::uint64_t parse_seed(const std::string& text) {
  try {
    std::size_t used = 0;
    const std::uint64_t value = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    raise(ErrorKind::InvalidConfig, "seed is not an unsigned integer: " + text);
  }
}

template <typename T>
T get_as(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    raise(ErrorKind::InvalidConfig, "config key '" + key + "' has the wrong type");
  }
}

}  // namespace

void apply_overrides(ExperimentConfig& config, const nlohmann::json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) raise(ErrorKind::InvalidConfig, "config must be a flat JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (key == "name") {
      config.name = get_as<std::string>(value, key);
    } else if (key == "field") {
      config.field = value;
    } else if (key == "method") {
      config.method = get_as<std::string>(value, key);
    } else if (key == "h") {
      config.h = get_as<double>(value, key);
    } else if (key == "h_grid") {
      config.h_grid = get_as<std::vector<double>>(value, key);
    } else if (key == "x0") {
      const auto v = get_as<std::vector<double>>(value, key);
      config.x0 = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    } else if (key == "n_steps") {
      config.n_steps = get_as<std::size_t>(value, key);
    } else if (key == "samples") {
      config.samples = get_as<std::size_t>(value, key);
    } else if (key == "seed") {
      config.seed = value.is_string() ? parse_seed(value.get<std::string>()) : get_as<std::uint64_t>(value, key);
    } else if (key == "preserve_tol") {
      config.preserve_tol = get_as<double>(value, key);
    } else if (key == "violate_tol") {
      config.violate_tol = get_as<double>(value, key);
    } else {
      raise(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
}

std::optional<std::uint64_t> seed_from_env() {
  const char* text = std::getenv("VPRK_SEED");
  if (text == nullptr || *text == '\0') return std::nullopt;
  return parse_seed(text);
}

// --- Reports --------------------------------------------------------------------

bool ExperimentReport::matches_expectation() const {
  for (const auto& c : cases) {
    if (!c.matches()) return false;
  }
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["verdict"] = to_string(verdict);
  j["expected"] = expected ? nlohmann::json(to_string(*expected)) : nlohmann::json();
  j["max_dev"] = max_dev;
  j["matches_expectation"] = matches_expectation();
  j["wall_time_s"] = wall_time_s;
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cases) {
    nlohmann::json cj;
    cj["label"] = c.label;
    cj["expected"] = c.expected ? nlohmann::json(to_string(*c.expected)) : nlohmann::json();
    cj["verdict"] = to_string(c.verdict);
    cj["metric"] = c.metric;
    cj["max_dev"] = c.max_dev;
    cj["rows"] = c.rows.size();
    if (c.error) cj["error"] = *c.error;
    cs.push_back(std::move(cj));
  }
  j["cases"] = std::move(cs);
  nlohmann::json ch = nlohmann::json::array();
  for (const auto& c : checks) {
    ch.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
  }
  j["checks"] = std::move(ch);
  return j;
}

// --- Case builders --------------------------------------------------------------

namespace {

using Expect = std::optional<Verdict>;

struct Context {
  const ExperimentConfig& config;
  ExperimentReport& report;

  void finish(CaseReport c) {
    for (const auto& row : c.rows) {
      const double value = c.metric == "density_residual" ? row.density_residual : row.abs_dev;
      c.max_dev = std::isnan(value) ? std::numeric_limits<double>::infinity() : std::max(c.max_dev, value);
    }
    c.verdict = c.error ? Verdict::Inconclusive
                        : classify_deviation(c.max_dev, config.preserve_tol, config.violate_tol);
    report.cases.push_back(std::move(c));
  }

  void check(std::string name, bool pass, double value, std::string detail = {}) {
    report.checks.push_back({std::move(name), pass, value, std::move(detail)});
  }

  /// Runs `body`; a thrown Error fails the named check instead of aborting.
  void guarded_check(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const Error& e) {
      check(name, false, std::numeric_limits<double>::quiet_NaN(), e.what());
    }
  }
};

/// Trajectories of `method` from each start point; every step becomes a row.
CaseReport trajectory_case(std::string label, const VectorField& field, const Method& method, double h,
                           const std::vector<Vector>& starts, std::size_t n_steps,
                           const std::optional<DensitySpec>& density, Expect expected) {
  CaseReport c;
  c.label = std::move(label);
  c.expected = expected;
  c.metric = density ? "density_residual" : "abs_dev";
  try {
    for (const auto& x0 : starts) {
      const Trajectory traj = trajectory(field, method, h, x0, n_steps);
      for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const MethodStep& s = traj.steps[k];
        StepRow row;
        row.step = k + 1;
        row.h = h;
        row.det_phi = method_det(field, method, s);
        row.abs_dev = std::abs(row.det_phi - 1.0);
        row.density_residual =
            density ? measure_residual(*density, h, s.x, s.x_next, row.det_phi) : row.abs_dev;
        row.x = s.x_next;
        c.rows.push_back(std::move(row));
      }
      if (traj.failure) {
        c.error = "step " + std::to_string(traj.failure->step_index) + ": " + traj.failure->message;
        break;
      }
    }
  } catch (const Error& e) {
    c.error = e.what();
  }
  return c;
}

std::string h_label(double h) { return "h=" + format_double(h); }

std::vector<double> h_values(const ExperimentConfig& config, std::vector<double> defaults) {
  if (config.h) return {*config.h};
  if (!config.h_grid.empty()) return config.h_grid;
  return defaults;
}

std::vector<Vector> starts_for(const ExperimentConfig& config, Index dim, std::uint64_t seed,
                               std::optional<Vector> fallback = std::nullopt) {
  if (config.x0) {
    if (config.x0->size() != dim) raise(ErrorKind::InvalidConfig, "x0 does not match the field dimension");
    return {*config.x0};
  }
  if (fallback) return {*fallback};
  return sample_points(dim, config.samples, seed);
}

std::vector<std::pair<std::string, VectorField>> fields_for(const ExperimentConfig& config,
                                                             const std::vector<std::string>& defaults) {
  std::vector<std::pair<std::string, VectorField>> out;
  if (!config.field.is_null()) {
    VectorField f = field_from_json(config.field);
    out.emplace_back(f.name(), std::move(f));
    return out;
  }
  for (const auto& name : defaults) out.emplace_back(name, builtin_field(name));
  return out;
}

std::vector<std::string> methods_for(const ExperimentConfig& config, std::vector<std::string> defaults) {
  if (!config.method.empty()) return {config.method};
  return defaults;
}

/// Expectation when the method may have been overridden: the registry value
/// for the default method, PRESERVED for the 1-stage midpoint rule, otherwise none.
Expect expectation_for(const std::string& method, const std::string& default_method, Verdict default_expected) {
  if (method == default_method) return default_expected;
  if (method == "midpoint") return Verdict::Preserved;
  return std::nullopt;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// --- Registry entries ----------------------------------------------------------------

void run_volume_family(Context& ctx, const std::vector<std::string>& default_fields,
                       const std::vector<std::string>& default_methods, std::vector<double> default_h,
                       std::size_t default_steps) {
  const auto& cfg = ctx.config;
  Rng rng(cfg.seed);
  for (const auto& [name, field] : fields_for(cfg, default_fields)) {
    const auto starts = starts_for(cfg, field.dim(), rng.next());
    for (const auto& method_text : methods_for(cfg, default_methods)) {
      const Method method = method_from_name(method_text);
      const Expect expected = cfg.method.empty() ? Expect(Verdict::Preserved)
                                                 : expectation_for(method_text, default_methods.front(),
                                                                   Verdict::Preserved);
      for (double h : h_values(cfg, default_h)) {
        ctx.finish(trajectory_case(name + "/" + method_name(method) + "/" + h_label(h), field, method, h, starts,
                                   cfg.n_steps.value_or(default_steps), std::nullopt, expected));
      }
    }
  }
}

void run_midpoint_d(Context& ctx) {
  run_volume_family(ctx, {"quad_hamiltonian", "example1", "example2", "example3", "kahan_remark"}, {"midpoint"},
                    {0.1, 0.3, 0.5}, 1);
}

void run_hlw_gauss2(Context& ctx) {
  run_volume_family(ctx, {"hlw_separable"}, {"gauss2", "gauss2*midpoint"}, {0.3}, 3);
}

void run_srk_on_h(Context& ctx) { run_volume_family(ctx, {"quad_hamiltonian"}, {"gauss2", "gauss3"}, {0.3}, 3); }

/// A single counterexample trajectory with a midpoint control when requested.
void run_counterexample(Context& ctx, const std::string& default_field, const std::string& default_method,
                        double default_h, const Vector& default_x0, std::size_t default_steps, bool control) {
  const auto& cfg = ctx.config;
  const auto fields = fields_for(cfg, {default_field});
  const auto& [name, field] = fields.front();
  const std::string method_text = cfg.method.empty() ? default_method : cfg.method;
  const Method method = method_from_name(method_text);
  const double h = cfg.h.value_or(default_h);
  const auto starts = starts_for(cfg, field.dim(), cfg.seed, cfg.field.is_null() ? std::optional(default_x0) : std::nullopt);
  const std::size_t steps = cfg.n_steps.value_or(default_steps);
  ctx.finish(trajectory_case(name + "/" + method_name(method) + "/" + h_label(h), field, method, h, starts, steps,
                             std::nullopt, expectation_for(method_text, default_method, Verdict::Violated)));
  if (control && method_text != "midpoint") {
    ctx.finish(trajectory_case(name + "/midpoint/" + h_label(h) + "/control", field, builtin_tableau("midpoint"), h,
                               starts, steps, std::nullopt, Verdict::Preserved));
  }

  // The closed-form determinant against central differences of the step map.
  if (const auto* tableau = std::get_if<ButcherTableau>(&method)) {
    ctx.guarded_check("fd_oracle_agrees", [&] {
      const VolumeReport v = rk_volume(field, *tableau, h, starts.front(), true);
      const double gap = std::abs(*v.fd_det - v.det_phi);
      ctx.check("fd_oracle_agrees", gap <= 1e-5 * (1.0 + std::abs(v.det_phi)), gap,
                "det_phi=" + format_double(v.det_phi) + " fd=" + format_double(*v.fd_det));
    });
  }
}

void run_example1_gauss3(Context& ctx) {
  run_counterexample(ctx, "example1", "gauss3", 0.7, vec({0.1, 0.2, 0.3}), 20, false);
}

void run_example2_gauss2(Context& ctx) {
  run_counterexample(ctx, "example2", "gauss2", 0.5, vec({0.5, 0.0, 0.0}), 1, false);
  const auto& cfg = ctx.config;
  ctx.guarded_check("stage_x_opposite_sign", [&] {
    const VectorField field = cfg.field.is_null() ? builtin_field("example2") : field_from_json(cfg.field);
    const Method method = method_from_name(cfg.method.empty() ? "gauss2" : cfg.method);
    const auto* tableau = std::get_if<ButcherTableau>(&method);
    if (tableau == nullptr || tableau->stages() < 2) {
      ctx.check("stage_x_opposite_sign", false, 0.0, "method has fewer than two stages");
      return;
    }
    const Vector x0 = cfg.x0.value_or(vec({0.5, 0.0, 0.0}));
    const StepResult s = rk_step(field, *tableau, cfg.h.value_or(0.5), x0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::string detail = "stage x:";
    for (const auto& k : s.stage_lin->stages) {
      lo = std::min(lo, k(0));
      hi = std::max(hi, k(0));
      detail += " " + format_double(k(0));
    }
    ctx.check("stage_x_opposite_sign", lo < 0.0 && hi > 0.0, lo * hi, detail);
  });
}

void run_example3_gauss2(Context& ctx) {
  run_counterexample(ctx, "example3", "gauss2", 0.5, vec({1.0, 0.5, 1.0 / 3.0, 0.25, 0.2}), 1, true);
}

void add_duality_check(Context& ctx, const std::string& name, const VectorField& field, double h,
                       const std::vector<Vector>& points, bool kahan) {
  ctx.guarded_check(name, [&] {
    const DensitySpec plus = kahan ? DensitySpec::kahan(field, h, +1) : DensitySpec::trapezoidal(field, h, +1);
    const DensitySpec minus = kahan ? DensitySpec::kahan(field, h, -1) : DensitySpec::trapezoidal(field, h, -1);
    double worst = 0.0;
    for (const auto& x : points) {
      const double a = plus.eval(x);
      const double b = minus.eval(x);
      worst = std::max(worst, std::abs(a - b) / std::max({1.0, a, b}));
    }
    ctx.check(name, worst <= 1e-9, worst);
  });
}

void run_trapezoidal_measure(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::string method_text = cfg.method.empty() ? "trapezoidal" : cfg.method;
  const Method method = method_from_name(method_text);
  const Expect expected = expectation_for(method_text, "trapezoidal", Verdict::Preserved);
  const std::size_t steps = cfg.n_steps.value_or(3);
  Rng rng(cfg.seed);
  for (const auto& [name, field] : fields_for(cfg, {"example3", "quad_hamiltonian"})) {
    const auto starts = starts_for(cfg, field.dim(), rng.next());
    for (double h : h_values(cfg, {0.1, 0.5})) {
      const DensitySpec mu = DensitySpec::trapezoidal(field, h, -1);
      ctx.finish(trajectory_case(name + "/" + method_name(method) + "/" + h_label(h) + "/trapezoidal_minus", field,
                                 method, h, starts, steps, mu, expected));
      add_duality_check(ctx, "plus_minus_duality/" + name + "/" + h_label(h), field, h, starts, false);

      ctx.guarded_check("telescoping/" + name + "/" + h_label(h), [&] {
        const std::size_t n = 10;
        const Trajectory traj = trajectory(field, method, h, starts.front(), n);
        if (!traj.ok()) raise(traj.failure->kind, traj.failure->message);
        double product = 1.0;
        for (const auto& s : traj.steps) product *= method_det(field, method, s);
        const double mu0 = mu.eval(starts.front());
        const double gap = std::abs(product * mu.eval(traj.steps.back().x_next) - mu0) / mu0;
        ctx.check("telescoping/" + name + "/" + h_label(h), gap <= 1e-8 * static_cast<double>(n), gap);
      });
    }
  }

  // Global volume drift on [0, 1] from the example3 start point, halving h twice.
  ctx.guarded_check("volume_drift_order_h2", [&] {
    const VectorField field = builtin_field("example3");
    const Vector z0 = vec({1.0, 0.5, 1.0 / 3.0, 0.25, 0.2});
    std::vector<double> drift;
    for (double h : {0.1, 0.05, 0.025}) {
      const auto n = static_cast<std::size_t>(std::lround(1.0 / h));
      const Trajectory traj = trajectory(field, builtin_tableau("trapezoidal"), h, z0, n);
      if (!traj.ok()) raise(traj.failure->kind, traj.failure->message);
      double product = 1.0;
      for (const auto& s : traj.steps) product *= method_det(field, builtin_tableau("trapezoidal"), s);
      drift.push_back(std::abs(product - 1.0));
    }
    const double r1 = drift[0] / drift[1];
    const double r2 = drift[1] / drift[2];
    const double worst = std::max(std::abs(r1 / 4.0 - 1.0), std::abs(r2 / 4.0 - 1.0));
    ctx.check("volume_drift_order_h2", worst <= 0.15, worst,
              "ratios " + format_double(r1) + ", " + format_double(r2));
  });
}

std::vector<std::pair<std::string, QuadraticFieldSpec>> quadratic_fields_for(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, QuadraticFieldSpec>> out;
  if (!cfg.field.is_null()) {
    const VectorField f = field_from_json(cfg.field);
    if (f.quadratic() == nullptr) raise(ErrorKind::InvalidConfig, "field " + f.name() + " is not quadratic");
    out.emplace_back(f.name(), *f.quadratic());
    return out;
  }
  const auto suite = quadratic_d_suite(20, cfg.seed);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    out.emplace_back("quadD#" + std::to_string(i) + "(n=" + std::to_string(suite[i].dim()) + ")", suite[i]);
  }
  return out;
}

void run_kahan_measure(Context& ctx) {
  const auto& cfg = ctx.config;
  const std::string method_text = cfg.method.empty() ? "kahan" : cfg.method;
  const Method method = method_from_name(method_text);
  const Expect expected = method_text == "kahan" || method_text == "kahan_rk" ? Expect(Verdict::Preserved)
                                                                              : std::nullopt;
  Rng rng(cfg.seed);
  double worst_class = 0.0;
  for (const auto& [name, spec] : quadratic_fields_for(cfg)) {
    const VectorField field = spec.to_field(name);
    const auto starts = starts_for(cfg, field.dim(), rng.next());
    worst_class = std::max(worst_class, det_condition_check(field, starts, {0.1, 0.5, 1.0}).max_deviation);
    for (double h : h_values(cfg, {0.1, 0.2})) {
      ctx.finish(trajectory_case(name + "/" + method_name(method) + "/" + h_label(h) + "/kahan_minus", field, method,
                                 h, starts, cfg.n_steps.value_or(3), DensitySpec::kahan(field, h, -1), expected));
      add_duality_check(ctx, "plus_minus_duality/" + name + "/" + h_label(h), field, h, starts, true);
    }
  }
  ctx.check("fields_satisfy_det_condition", worst_class <= 1e-9, worst_class);
}

void run_kahan_rk_equiv(Context& ctx) {
  const auto& cfg = ctx.config;
  const KahanWeights weights = kahan_weights(3);
  const ButcherTableau tableau = kahan_tableau(weights);
  Rng rng(cfg.seed);
  double gap_direct = 0.0;
  double gap_tableau = 0.0;
  std::string failure;
  for (const auto& [name, spec] : quadratic_fields_for(cfg)) {
    const VectorField field = spec.to_field(name);
    const auto starts = starts_for(cfg, field.dim(), rng.next());
    for (double h : h_values(cfg, {0.1, 0.2})) {
      ctx.finish(trajectory_case(name + "/kahan_rk/" + h_label(h) + "/kahan_minus", field, KahanRkMethod{weights}, h,
                                 starts, cfg.n_steps.value_or(1), DensitySpec::kahan(field, h, -1),
                                 Verdict::Preserved));
      try {
        for (const auto& x : starts) {
          const Vector direct = kahan_step(spec, h, x).x_next;
          const Vector via_rk = kahan_rk_step(field, weights, h, x).x_next;
          const Vector via_tableau = rk_step(field, tableau, h, x).x_next;
          gap_direct = std::max(gap_direct, max_abs(Vector(direct - via_rk)));
          gap_tableau = std::max(gap_tableau, max_abs(Vector(direct - via_tableau)));
        }
      } catch (const Error& e) {
        failure = e.what();
      }
    }
  }
  ctx.check("kahan_rk_matches_kahan", failure.empty() && gap_direct <= 1e-10, gap_direct, failure);
  ctx.check("kahan_tableau_matches_kahan", failure.empty() && gap_tableau <= 1e-10, gap_tableau, failure);
  double worst_moment = 0.0;
  for (Index s = 3; s <= 6; ++s) worst_moment = std::max(worst_moment, kahan_weights(s).moments().cwiseAbs().maxCoeff());
  ctx.check("weight_moments", worst_moment <= 1e-12, worst_moment, "s = 3..6");
}

QuadraticMap random_quadratic_map(Index in_dim, Index out_dim, Rng& rng) {
  QuadraticMap w;
  for (Index i = 0; i < out_dim; ++i) w.q.push_back(0.5 * rng.symmetric(in_dim));
  w.l = 0.5 * rng.matrix(out_dim, in_dim);
  w.d = 0.5 * rng.vector(out_dim);
  return w;
}

void run_kahan_foliation(Context& ctx) {
  const auto& cfg = ctx.config;
  Rng rng(cfg.seed);
  const QuadraticFieldSpec u = QuadraticFieldSpec::affine(
      (Matrix(2, 2) << 0.0, 1.0, -1.0, 0.0).finished(), Vector::Zero(2));
  const QuadraticFieldSpec v = random_quadratic_d_field(2, rng.next());
  const QuadraticMap w = random_quadratic_map(2, 2, rng);
  QuadraticMap w_zero{std::vector<Matrix>(2, Matrix::Zero(2, 2)), Matrix::Zero(2, 2), Vector::Zero(2)};
  const std::size_t steps = cfg.n_steps.value_or(1);
  const auto starts = starts_for(cfg, 4, rng.next());

  for (double h : h_values(cfg, {0.2})) {
    for (const auto& [label, wmap] : {std::pair{"w_quadratic", w}, std::pair{"w_zero", w_zero}}) {
      const VectorField field = assemble_linear_foliation(u, v, wmap).to_field(std::string("foliation/") + label);
      ctx.finish(trajectory_case(std::string("foliation/") + label + "/kahan/" + h_label(h) + "/kahan_plus", field,
                                 KahanMethod{}, h, starts, steps, DensitySpec::kahan(field, h, +1),
                                 Verdict::Preserved));
    }
    // Arbitrary smooth w through the generalized Kahan method.
    const VectorMap w_smooth{2, 2,
                             [](const Vector& x) { return vec({std::sin(x(0)) + x(1) * x(1), std::cos(x(0) * x(1))}); },
                             [](const Vector& x) {
                               Matrix m(2, 2);
                               m << std::cos(x(0)), 2.0 * x(1), -x(1) * std::sin(x(0) * x(1)),
                                   -x(0) * std::sin(x(0) * x(1));
                               return m;
                             }};
    const VectorField smooth = foliate(
        FoliationSpec{u.to_field("u"), CoupledMap::sum_of(w_smooth, v.to_field("v")), std::nullopt},
        "foliation/w_smooth");
    ctx.finish(trajectory_case("foliation/w_smooth/kahan_rk/" + h_label(h) + "/kahan_plus", smooth,
                               KahanRkMethod{kahan_weights(3)}, h, starts, steps, DensitySpec::kahan(smooth, h, +1),
                               Verdict::Preserved));
  }

  // Negative control: coupling through H(x, y) = (p_x q_x) p_y q_y is not of the form v(y) + w(x).
  const double h_remark = cfg.h.value_or(0.5);
  const VectorField remark = builtin_field("kahan_remark");
  CaseReport negative = trajectory_case("kahan_remark/kahan_rk/" + h_label(h_remark) + "/kahan_plus", remark,
                                        KahanRkMethod{kahan_weights(3)}, h_remark, starts, steps,
                                        DensitySpec::kahan(remark, h_remark, +1), Verdict::Violated);
  double remark_max = 0.0;
  for (const auto& row : negative.rows) remark_max = std::max(remark_max, row.density_residual);
  const bool remark_ok = !negative.error.has_value();
  ctx.finish(std::move(negative));
  ctx.check("remark_residual_ge_1e-6", remark_ok && remark_max >= 1e-6, remark_max);
}

void run_classify_all(Context& ctx) {
  const auto& cfg = ctx.config;
  Rng rng(cfg.seed);
  std::vector<std::pair<std::string, VectorField>> fields;
  if (!cfg.field.is_null()) {
    fields = fields_for(cfg, {});
  } else {
    for (const auto& name : builtin_field_names()) fields.emplace_back(name, builtin_field(name));
  }
  const std::vector<double> grid = cfg.h_grid.empty() ? std::vector<double>{0.1, 0.5, 1.0} : cfg.h_grid;
  for (const auto& [name, field] : fields) {
    ClassifyConfig cc = default_classify_config(field.dim(), rng.next(), cfg.samples);
    cc.h_grid = grid;
    if (cfg.field.is_null() && name == "quad_hamiltonian") {
      Matrix j = Matrix::Zero(4, 4);
      j.topRightCorner(2, 2) = Matrix::Identity(2, 2);
      j.bottomLeftCorner(2, 2) = -Matrix::Identity(2, 2);
      cc.p_h = Matrix(j.transpose());
    }
    if (cfg.field.is_null() && name == "hlw_separable") {
      Vector signs(field.dim());
      signs << 1.0, 1.0, -1.0, -1.0;
      cc.p_s = Matrix(signs.asDiagonal());
    }
    CaseReport c;
    c.label = name;
    c.expected = Verdict::Preserved;
    try {
      const ClassReport r = classify(field, cc);
      for (std::size_t i = 0; i < cc.samples.size(); ++i) {
        const Matrix jac = field.jacobian(cc.samples[i]);
        const Matrix eye = Matrix::Identity(jac.rows(), jac.cols());
        StepRow row;
        row.step = i + 1;
        row.h = grid.back();
        row.det_phi = det(Matrix(eye + 0.5 * row.h * jac)) / det(Matrix(eye - 0.5 * row.h * jac));
        row.abs_dev = r.det_condition.per_sample[i];
        row.density_residual = row.abs_dev;
        row.x = cc.samples[i];
        c.rows.push_back(std::move(row));
      }
      ctx.check("equivalence/" + name, r.equivalence_consistent, r.det_condition.max_deviation);
      if (r.similarity_h) ctx.check("similarity_H/" + name, r.similarity_h->pass, r.similarity_h->defect);
      if (r.similarity_s) ctx.check("similarity_S/" + name, r.similarity_s->pass, r.similarity_s->defect);
    } catch (const Error& e) {
      c.error = e.what();
    }
    ctx.finish(std::move(c));
  }

  // Cross-equivalence on linear fields: 25 with paired spectrum, 25 generic.
  ctx.guarded_check("linear_equivalence_50", [&] {
    Rng lin(rng.next());
    int agree = 0;
    int correct = 0;
    for (int i = 0; i < 50; ++i) {
      const Index n = 2 + i % 3;
      const bool paired = i < 25;
      const Matrix l = paired ? random_paired_matrix(n, lin) : random_generic_matrix(n, lin);
      double dev = 0.0;
      for (double h : grid) dev = std::max(dev, det_condition_deviation(l, h));
      const bool by_det = dev <= 1e-9;
      const bool by_trace = odd_trace_check(l, static_cast<int>(n)).pass;
      const bool by_eig = eig_pairing_check(l).pass;
      agree += (by_det == by_trace && by_trace == by_eig) ? 1 : 0;
      correct += (by_det == paired) ? 1 : 0;
    }
    ctx.check("linear_equivalence_50", agree == 50 && correct == 50, agree,
              std::to_string(agree) + "/50 agree, " + std::to_string(correct) + "/50 match construction");
  });
}

void run_foliation_factor(Context& ctx) {
  const auto& cfg = ctx.config;
  Rng rng(cfg.seed);
  const double h = cfg.h.value_or(0.3);
  struct Target {
    std::string name;
    FoliationSpec spec;
  };
  const std::vector<Target> targets{{"sum_demo", builtin_foliation("sum_demo")},
                                    {"kahan_remark", builtin_foliation("kahan_remark")}};
  for (const auto& method_text : methods_for(cfg, {"midpoint", "trapezoidal"})) {
    const ButcherTableau tableau = builtin_tableau(method_text);
    for (const auto& target : targets) {
      if (tableau.stages() > 1 && !target.spec.v.sum) continue;
      const Index m = target.spec.u.dim();
      const Index n = target.spec.v.y_dim;
      CaseReport c;
      c.label = target.name + "/" + method_text + "/" + h_label(h) + "/factorisation";
      c.expected = Verdict::Preserved;
      try {
        for (const auto& z : starts_for(cfg, m + n, rng.next())) {
          const FoliationFactors ff =
              foliation_factor_check(target.spec.u, target.spec.v, tableau, h, z.head(m), z.tail(n));
          StepRow row;
          row.step = 1;
          row.h = h;
          row.det_phi = ff.lhs;
          row.abs_dev = std::abs(ff.lhs - ff.rhs);
          row.density_residual = ff.map_defect;
          row.x = z;
          c.rows.push_back(std::move(row));
        }
      } catch (const Error& e) {
        c.error = e.what();
      }
      ctx.finish(std::move(c));
    }
  }

  // Trapezoidal: c = e = 0 and d = (w(k₁) + w(k₂))/2.
  ctx.guarded_check("trapezoidal_sum_form", [&] {
    const FoliationSpec spec = builtin_foliation("sum_demo");
    const ButcherTableau trap = builtin_tableau("trapezoidal");
    double worst = 0.0;
    for (const auto& z : sample_points(4, cfg.samples, rng.next())) {
      const FoliationFactors ff = foliation_factor_check(spec.u, spec.v, trap, h, z.head(2), z.tail(2));
      const StepResult psi = rk_step(spec.u, trap, h, z.head(2));
      const auto& w = spec.v.sum->w;
      const Vector mean = 0.5 * (w.eval(psi.stage_lin->stages[0]) + w.eval(psi.stage_lin->stages[1]));
      worst = std::max({worst, max_abs(*ff.c), max_abs(*ff.e), max_abs(Vector(*ff.d - mean))});
    }
    ctx.check("trapezoidal_sum_form", worst <= 1e-12, worst);
  });

  // gauss3 fails the δ-condition.
  {
    const FoliationSpec spec = builtin_foliation("sum_demo");
    bool raised = false;
    std::string detail = "no error";
    try {
      foliation_factor_check(spec.u, spec.v, builtin_tableau("gauss3"), h, vec({0.3, -0.2}), vec({0.1, 0.4}));
    } catch (const Error& e) {
      raised = e.kind() == ErrorKind::DeltaConditionViolated;
      detail = e.what();
    }
    ctx.check("gauss3_delta_condition_violated", raised, raised ? 1.0 : 0.0, detail);
  }
}

struct Entry {
  const char* name;
  void (*run)(Context&);
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries{
      {"midpoint_D", run_midpoint_d},
      {"hlw_gauss2", run_hlw_gauss2},
      {"srk_on_H", run_srk_on_h},
      {"example1_gauss3", run_example1_gauss3},
      {"example2_gauss2", run_example2_gauss2},
      {"example3_gauss2", run_example3_gauss2},
      {"trapezoidal_measure", run_trapezoidal_measure},
      {"kahan_measure", run_kahan_measure},
      {"kahan_rk_equiv", run_kahan_rk_equiv},
      {"kahan_foliation", run_kahan_foliation},
      {"classify_all", run_classify_all},
      {"foliation_factor", run_foliation_factor},
  };
  return entries;
}

const Entry& find_entry(const std::string& name) {
  for (const auto& e : registry()) {
    if (name == e.name) return e;
  }
  raise(ErrorKind::UnknownExperiment, name);
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& e : registry()) out.emplace_back(e.name);
  return out;
}

ExperimentConfig default_config(const std::string& name) {
  find_entry(name);
  ExperimentConfig config;
  config.name = name;
  if (auto seed = seed_from_env()) config.seed = *seed;
  return config;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Entry& entry = find_entry(config.name);
  ExperimentReport report;
  report.config = config;
  const auto start = std::chrono::steady_clock::now();
  Context ctx{config, report};
  entry.run(ctx);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!report.cases.empty()) {
    report.expected = report.cases.front().expected;
    for (const auto& c : report.cases) {
      if (c.expected != report.expected) continue;
      if (c.error) {
        report.max_dev = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      report.max_dev = std::max(report.max_dev, c.max_dev);
    }
    report.verdict = classify_deviation(report.max_dev, config.preserve_tol, config.violate_tol);
  }
  return report;
}

ExperimentReport run_named(const std::string& name, const nlohmann::json& overrides) {
  ExperimentConfig config = default_config(name);
  apply_overrides(config, overrides);
  if (config.name != name) raise(ErrorKind::InvalidConfig, "config names experiment " + config.name);
  if (auto seed = seed_from_env()) config.seed = *seed;
  return run_experiment(config);
}

std::string csv_string(const ExperimentReport& report) {
  Index width = 0;
  for (const auto& c : report.cases) {
    for (const auto& row : c.rows) width = std::max(width, row.x.size());
  }
  std::ostringstream out;
  out << "step,h,det_phi,abs_dev,density_residual";
  for (Index i = 0; i < width; ++i) out << ",x" << i;
  out << '\n';
  for (const auto& c : report.cases) {
    for (const auto& row : c.rows) {
      out << row.step << ',' << format_double(row.h) << ',' << format_double(row.det_phi) << ','
          << format_double(row.abs_dev) << ',' << format_double(row.density_residual);
      for (Index i = 0; i < width; ++i) {
        out << ',';
        if (i < row.x.size()) out << format_double(row.x(i));
      }
      out << '\n';
    }
  }
  return out.str();
}

void emit_csv(const ExperimentReport& report, const std::filesystem::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  file << csv_string(report);
  file.flush();
  if (!file) raise(ErrorKind::IoError, "write to " + path.string() + " failed");
}

}  // namespace vprk
