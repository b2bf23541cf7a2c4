#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "vprk/linalg.hpp"

namespace vprk {

/// Coefficients (A, b, c) of an s-stage Runge-Kutta method. The abscissae c
/// are always recomputed as the row sums of A.
class ButcherTableau {
 public:
  ButcherTableau(Matrix a, Vector b, std::string name = {});

  Index stages() const { return b_.size(); }
  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  const Vector& c() const { return c_; }
  const std::string& name() const { return name_; }

  /// Σ b_i = 1 to 1e-14.
  bool consistent() const;

 private:
  Matrix a_;
  Vector b_;
  Vector c_;
  std::string name_;
};

/// Normal form A = ½(Ω + 𝟙𝟙ᵀ) diag(b) of a symplectic method with nonzero weights.
struct SsrkSpec {
  Vector b;
  Matrix omega;

  /// Throws BadParams unless Ω is skew to 1e-14 and every b_i is nonzero.
  void validate() const;
};

ButcherTableau ssrk_to_tableau(const SsrkSpec& spec);

/// ‖BA + AᵀB − bbᵀ‖∞ with B = diag(b).
double symplecticity_defect(const ButcherTableau& t);

struct DeltaCondition {
  bool satisfied = false;
  /// Common δ_j when satisfied (empty for s = 1).
  std::optional<Vector> delta;
};

/// Checks that δ_j(i,k) = (a_ij − a_kj)/(c_i − c_k) is finite and the same for
/// every pair of distinct stages i ≠ k.
DeltaCondition delta_condition(const ButcherTableau& t);

/// One of midpoint, trapezoidal, gauss2, gauss3. Throws UnknownTableau.
ButcherTableau builtin_tableau(const std::string& name);

nlohmann::json tableau_to_json(const ButcherTableau& t);
ButcherTableau tableau_from_json(const nlohmann::json& j);

}  // namespace vprk
