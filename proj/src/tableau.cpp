#include "vprk/tableau.hpp"

#include <cmath>


namespace vprk {

namespace {

constexpr double kStructureTol = 1e-14;
constexpr double kDeltaTol = 1e-12;

}  // namespace

ButcherTableau::ButcherTableau(Matrix a, Vector b, std::string name)
    : a_(std::move(a)), b_(std::move(b)), name_(std::move(name)) {
  require_square(a_, "Butcher matrix A");
  if (a_.rows() != b_.size() || b_.size() == 0) {
    raise(ErrorKind::DimensionMismatch, "tableau needs A s×s and b of length s ≥ 1");
  }
  require_finite(a_, "Butcher matrix A");
  require_finite(b_, "Butcher weights b");
  c_ = a_.rowwise().sum();
}

bool ButcherTableau::consistent() const { return std::abs(b_.sum() - 1.0) <= kStructureTol; }

void SsrkSpec::validate() const {
  require_square(omega, "Omega");
  if (omega.rows() != b.size() || b.size() == 0) {
    raise(ErrorKind::DimensionMismatch, "SSRK needs Omega s×s and b of length s ≥ 1");
  }
  require_finite(omega, "Omega");
  require_finite(b, "SSRK weights");
  if (max_abs(Matrix(omega + omega.transpose())) > kStructureTol) {
    raise(ErrorKind::BadParams, "Omega is not skew-symmetric");
  }
  for (Index i = 0; i < b.size(); ++i) {
    if (b(i) == 0.0) raise(ErrorKind::BadParams, "SSRK weights must be nonzero");
  }
}

ButcherTableau ssrk_to_tableau(const SsrkSpec& spec) {
  spec.validate();
  const Index s = spec.b.size();
  const Matrix ones = Matrix::Ones(s, s);
  Matrix a = 0.5 * (spec.omega + ones) * spec.b.asDiagonal();
  return ButcherTableau(std::move(a), spec.b, "ssrk");
}

double symplecticity_defect(const ButcherTableau& t) {
  const Matrix ba = t.b().asDiagonal() * t.a();
  const Matrix m = ba + ba.transpose() - t.b() * t.b().transpose();
  return inf_norm(m);
}

DeltaCondition delta_condition(const ButcherTableau& t) {
  const Index s = t.stages();
  if (s == 1) return {true, Vector(0)};

  const Vector& c = t.c();
  for (Index i = 0; i < s; ++i) {
    for (Index k = i + 1; k < s; ++k) {
      if (std::abs(c(i) - c(k)) <= kDeltaTol) return {};
    }
  }

  Vector delta(s);
  for (Index j = 0; j < s; ++j) delta(j) = (t.a()(0, j) - t.a()(1, j)) / (c(0) - c(1));

  for (Index j = 0; j < s; ++j) {
    for (Index i = 0; i < s; ++i) {
      for (Index k = 0; k < s; ++k) {
        if (i == k) continue;
        const double djik = (t.a()(i, j) - t.a()(k, j)) / (c(i) - c(k));
        if (std::abs(djik - delta(j)) > kDeltaTol) return {};
      }
    }
  }
  return {true, std::move(delta)};
}

ButcherTableau builtin_tableau(const std::string& name) {
  if (name == "midpoint") {
    return ButcherTableau(Matrix::Constant(1, 1, 0.5), Vector::Ones(1), name);
  }
  if (name == "trapezoidal") {
    Matrix a(2, 2);
    a << 0.0, 0.0, 0.5, 0.5;
    return ButcherTableau(std::move(a), Vector::Constant(2, 0.5), name);
  }
  if (name == "gauss2") {
    const double r3 = std::sqrt(3.0) / 6.0;
    Matrix a(2, 2);
    a << 0.25, 0.25 - r3, 0.25 + r3, 0.25;
    return ButcherTableau(std::move(a), Vector::Constant(2, 0.5), name);
  }
  if (name == "gauss3") {
    const double r15 = std::sqrt(15.0);
    Matrix a(3, 3);
    a << 5.0 / 36.0, 2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0,  //
        5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r15 / 24.0,    //
        5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0;
    Vector b(3);
    b << 5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0;
    return ButcherTableau(std::move(a), std::move(b), name);
  }
  raise(ErrorKind::UnknownTableau, name);
}

nlohmann::json tableau_to_json(const ButcherTableau& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < t.stages(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < t.stages(); ++j) row.push_back(t.a()(i, j));
    rows.push_back(std::move(row));
  }
  nlohmann::json b = nlohmann::json::array();
  for (Index i = 0; i < t.stages(); ++i) b.push_back(t.b()(i));
  return {{"s", t.stages()}, {"A", std::move(rows)}, {"b", std::move(b)}};
}

ButcherTableau tableau_from_json(const nlohmann::json& j) {
  try {
    const auto& rows = j.at("A");
    const auto& weights = j.at("b");
    const auto s = static_cast<Index>(weights.size());
    if (j.contains("s") && j.at("s").get<Index>() != s) {
      raise(ErrorKind::DimensionMismatch, "tableau field s disagrees with b");
    }
    if (static_cast<Index>(rows.size()) != s) {
      raise(ErrorKind::DimensionMismatch, "tableau A must have s rows");
    }
    Matrix a(s, s);
    Vector b(s);
    for (Index i = 0; i < s; ++i) {
      b(i) = weights.at(static_cast<std::size_t>(i)).get<double>();
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Index>(row.size()) != s) {
        raise(ErrorKind::DimensionMismatch, "tableau A must be square");
      }
      for (Index k = 0; k < s; ++k) a(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
    }
    return ButcherTableau(std::move(a), std::move(b), j.value("name", std::string("custom")));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::InvalidConfig, std::string("tableau JSON: ") + e.what());
  }
}

}  // namespace vprk
