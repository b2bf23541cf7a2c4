#include "vprk/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vprk/random.hpp"

namespace vprk {

namespace {

constexpr double kConditionTol = 1e-9;
constexpr double kZeroEigenvalue = 1e-9;
constexpr double kPairingTol = 1e-7;

Matrix checked_inverse(const Matrix& p) {
  require_square(p, "P");
  LuDecomposition<double> lu(p);
  if (lu.singular()) raise(ErrorKind::SingularP, "similarity matrix P is singular");
  return lu.solve(Matrix::Identity(p.rows(), p.cols()));
}

}  // namespace

double det_condition_deviation(const Matrix& jac, double h) {
  const Matrix eye = Matrix::Identity(jac.rows(), jac.cols());
  const double plus = det(Matrix(eye + 0.5 * h * jac));
  const double minus = det(Matrix(eye - 0.5 * h * jac));
  return std::abs(plus - minus) / std::max({1.0, std::abs(plus), std::abs(minus)});
}

DetConditionResult det_condition_check(const VectorField& field, const std::vector<Vector>& samples,
                                       const std::vector<double>& h_grid) {
  for (double h : h_grid) {
    if (!(h > 0.0)) raise(ErrorKind::BadParams, "h grid must be positive");
  }
  DetConditionResult out;
  out.per_sample.reserve(samples.size());
  for (const auto& x : samples) {
    const Matrix jac = field.jacobian(x);
    double worst = 0.0;
    for (double h : h_grid) worst = std::max(worst, det_condition_deviation(jac, h));
    out.per_sample.push_back(worst);
    out.max_deviation = std::max(out.max_deviation, worst);
  }
  out.pass = out.max_deviation <= kConditionTol;
  return out;
}

OddTraceResult odd_trace_check(const Matrix& jac, int k_max) {
  if (k_max < 0) raise(ErrorKind::BadParams, "k_max must be non-negative");
  require_square(jac, "Jacobian");
  OddTraceResult out;
  out.pass = true;
  const double norm = inf_norm(jac);
  const Matrix square = jac * jac;
  Matrix power = jac;
  for (int k = 0; k <= k_max; ++k) {
    const double trace = std::abs(power.trace());
    out.max_abs_trace.push_back(trace);
    if (trace > kConditionTol * (1.0 + std::pow(norm, 2 * k + 1))) out.pass = false;
    power = power * square;
  }
  out.per_sample.push_back(out.pass);
  return out;
}

OddTraceResult odd_trace_check(const VectorField& field, const std::vector<Vector>& samples, int k_max) {
  OddTraceResult out;
  out.pass = true;
  out.max_abs_trace.assign(static_cast<std::size_t>(std::max(k_max, 0) + 1), 0.0);
  for (const auto& x : samples) {
    const OddTraceResult one = odd_trace_check(field.jacobian(x), k_max);
    for (std::size_t k = 0; k < one.max_abs_trace.size(); ++k) {
      out.max_abs_trace[k] = std::max(out.max_abs_trace[k], one.max_abs_trace[k]);
    }
    out.per_sample.push_back(one.pass);
    out.pass = out.pass && one.pass;
  }
  return out;
}

EigPairingResult eig_pairing_check(const Matrix& jac) {
  require_square(jac, "Jacobian");
  require_finite(jac, "Jacobian");
  EigPairingResult out;
  if (jac.rows() == 0) {
    out.pass = true;
    return out;
  }
  Eigen::EigenSolver<Matrix> solver(jac, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) raise(ErrorKind::EigenFailure, "QR iteration did not converge");
  for (Index i = 0; i < solver.eigenvalues().size(); ++i) out.eigenvalues.push_back(solver.eigenvalues()(i));

  std::vector<std::complex<double>> nonzero;
  for (const auto& lambda : out.eigenvalues) {
    if (std::abs(lambda) > kZeroEigenvalue) nonzero.push_back(lambda);
  }
  std::vector<bool> matched(nonzero.size(), false);
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (matched[i]) continue;
    std::size_t best = nonzero.size();
    double best_gap = kPairingTol * (1.0 + std::abs(nonzero[i]));
    for (std::size_t j = 0; j < nonzero.size(); ++j) {
      if (j == i || matched[j]) continue;
      const double gap = std::abs(nonzero[i] + nonzero[j]);
      if (gap <= best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best < nonzero.size()) {
      matched[i] = matched[best] = true;
    }
  }
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (!matched[i]) out.unpaired.push_back(nonzero[i]);
  }
  out.pass = out.unpaired.empty();
  return out;
}

double similarity_defect(const Matrix& jac, const Matrix& p, SimilarityMode mode) {
  const Matrix p_inv = checked_inverse(p);
  const Matrix target = mode == SimilarityMode::H ? Matrix(jac.transpose()) : jac;
  return inf_norm(Matrix(p * jac * p_inv + target));
}

SimilarityResult similarity_check(const VectorField& field, const Matrix& p, SimilarityMode mode,
                                  const std::vector<Vector>& samples) {
  if (p.rows() != field.dim() || p.cols() != field.dim()) {
    raise(ErrorKind::DimensionMismatch, "P must be n×n");
  }
  const Matrix p_inv = checked_inverse(p);
  SimilarityResult out;
  out.pass = true;
  for (const auto& x : samples) {
    const Matrix jac = field.jacobian(x);
    const Matrix target = mode == SimilarityMode::H ? Matrix(jac.transpose()) : jac;
    const double defect = inf_norm(Matrix(p * jac * p_inv + target));
    out.defect = std::max(out.defect, defect);
    if (defect > kConditionTol * (1.0 + inf_norm(jac))) out.pass = false;
  }
  return out;
}

Vector char_poly_by_interpolation(const Matrix& jac) {
  require_square(jac, "Jacobian");
  const Index n = jac.rows();
  const Index nodes = n + 1;
  Matrix vandermonde(nodes, nodes);
  Vector values(nodes);
  const Matrix eye = Matrix::Identity(n, n);
  for (Index k = 0; k < nodes; ++k) {
    const double z = std::cos(std::numbers::pi * (2.0 * static_cast<double>(k) + 1.0) /
                              (2.0 * static_cast<double>(nodes)));
    double power = 1.0;
    for (Index j = 0; j < nodes; ++j) {
      vandermonde(k, j) = power;
      power *= z;
    }
    values(k) = det(Matrix(eye - z * jac));
  }
  return lu_solve(vandermonde, values);
}

Vector elementary_from_traces(const Matrix& jac) {
  require_square(jac, "Jacobian");
  const Index n = jac.rows();
  Vector traces(n + 1);
  Matrix power = Matrix::Identity(n, n);
  for (Index i = 1; i <= n; ++i) {
    power = power * jac;
    traces(i) = power.trace();
  }
  Vector e = Vector::Zero(n + 1);
  e(0) = 1.0;
  for (Index k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (Index i = 1; i <= k; ++i) acc += ((i % 2 == 1) ? 1.0 : -1.0) * e(k - i) * traces(i);
    e(k) = acc / static_cast<double>(k);
  }
  return e;
}

ClassifyConfig default_classify_config(Index dim, std::uint64_t seed, std::size_t count) {
  ClassifyConfig config;
  config.samples = sample_points(dim, count, seed);
  config.seed = seed;
  return config;
}

ClassReport classify(const VectorField& field, const ClassifyConfig& config) {
  if (config.samples.empty()) raise(ErrorKind::BadParams, "classification needs at least one sample");
  const int k_max = config.k_max.value_or(static_cast<int>(field.dim()));

  ClassReport report;
  report.field = field.name();
  report.samples = config.samples;
  report.h_grid = config.h_grid;
  report.seed = config.seed;
  report.det_condition = det_condition_check(field, config.samples, config.h_grid);
  report.odd_traces = odd_trace_check(field, config.samples, k_max);
  report.divergence = report.odd_traces.max_abs_trace.empty() ? 0.0 : report.odd_traces.max_abs_trace.front();

  report.eig_pairing_pass = true;
  report.equivalence_consistent = true;
  for (std::size_t i = 0; i < config.samples.size(); ++i) {
    const EigPairingResult pairing = eig_pairing_check(field.jacobian(config.samples[i]));
    report.eig_pairing_pass = report.eig_pairing_pass && pairing.pass;
    report.unpaired.insert(report.unpaired.end(), pairing.unpaired.begin(), pairing.unpaired.end());
    SampleVerdicts verdicts{report.det_condition.per_sample[i] <= kConditionTol,
                            report.odd_traces.per_sample[i], pairing.pass};
    if (verdicts.det_condition != verdicts.odd_traces || verdicts.odd_traces != verdicts.eig_pairing) {
      report.equivalence_consistent = false;
    }
    report.per_sample.push_back(verdicts);
  }
  if (config.p_h) report.similarity_h = similarity_check(field, *config.p_h, SimilarityMode::H, config.samples);
  if (config.p_s) report.similarity_s = similarity_check(field, *config.p_s, SimilarityMode::S, config.samples);
  return report;
}

Matrix random_paired_matrix(Index n, Rng& rng) {
  if (n < 2 || n > 4) raise(ErrorKind::BadParams, "paired matrices support 2 ≤ n ≤ 4");
  const Index even = n - n % 2;
  const Index half = even / 2;
  Matrix j = Matrix::Zero(even, even);
  j.topRightCorner(half, half) = Matrix::Identity(half, half);
  j.bottomLeftCorner(half, half) = -Matrix::Identity(half, half);
  Matrix core = Matrix::Zero(n, n);
  core.topLeftCorner(even, even) = j * rng.symmetric(even);
  if (n > even) core.bottomLeftCorner(n - even, even) = rng.matrix(n - even, even);
  const Matrix p = rng.invertible(n);
  return p * core * lu_solve(p, Matrix(Matrix::Identity(n, n)));
}

Matrix random_generic_matrix(Index n, Rng& rng) {
  Matrix m = rng.matrix(n, n);
  const double shift = 1.5 + rng.uniform();
  m.diagonal().array() += shift;
  return m;
}

nlohmann::json to_json(const ClassReport& report) {
  auto complex_list = [](const std::vector<std::complex<double>>& values) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : values) out.push_back({v.real(), v.imag()});
    return out;
  };
  nlohmann::json j;
  j["field"] = report.field;
  j["seed"] = report.seed;
  j["det_condition"] = {{"pass", report.det_condition.pass},
                        {"max_deviation", report.det_condition.max_deviation}};
  j["odd_traces"] = {{"pass", report.odd_traces.pass}, {"max_abs_trace", report.odd_traces.max_abs_trace}};
  j["eig_pairing"] = {{"pass", report.eig_pairing_pass}, {"unpaired", complex_list(report.unpaired)}};
  j["divergence"] = report.divergence;
  if (report.similarity_h) {
    j["similarity_H"] = {{"pass", report.similarity_h->pass}, {"defect", report.similarity_h->defect}};
  }
  if (report.similarity_s) {
    j["similarity_S"] = {{"pass", report.similarity_s->pass}, {"defect", report.similarity_s->defect}};
  }
  j["equivalence_consistent"] = report.equivalence_consistent;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& x : report.samples) samples.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  j["samples"] = std::move(samples);
  j["h_grid"] = report.h_grid;
  return j;
}

}  // namespace vprk
