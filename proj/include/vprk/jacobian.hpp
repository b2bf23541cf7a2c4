#pragma once

#include <functional>
#include <optional>

#include "vprk/integrator.hpp"

namespace vprk {

/// Determinant of one step map, as the quotient
/// det(I − h((A − 𝟙bᵀ)⊗I)F) / det(I − h(A⊗I)F).
struct VolumeReport {
  double det_phi = 1.0;
  double det_numerator = 1.0;
  double det_denominator = 1.0;
  /// det of the assembled Jacobian matrix; must agree with det_phi.
  double det_jacobian = 1.0;
  /// Central-difference oracle, when requested.
  std::optional<double> fd_det;
  double abs_dev_from_one = 0.0;
};

/// φ′_h(x) = I + h(bᵀ⊗I)F(I_s⊗I − h(A⊗I)F)⁻¹(𝟙⊗I). Throws SingularStageMatrix.
Matrix rk_jacobian(const VectorField& field, const ButcherTableau& tableau,
                   const StageLinearization& lin);

VolumeReport rk_det(const VectorField& field, const ButcherTableau& tableau,
                    const StageLinearization& lin);

/// Steps from x and reports the determinant, optionally with the
/// finite-difference oracle on the step map.
VolumeReport rk_volume(const VectorField& field, const ButcherTableau& tableau, double h,
                       const Vector& x, bool with_oracle = false);

/// det(I + (h/2)f′(x′)) / det(I − (h/2)f′(x)) for the Kahan image x′ of x.
/// Throws SingularDenominator.
double kahan_det(const QuadraticFieldSpec& spec, double h, const Vector& x, const Vector& x_next);

/// (I − (h/2)f′(x))⁻¹(I + (h/2)f′(x′)).
Matrix kahan_jacobian(const QuadraticFieldSpec& spec, double h, const Vector& x, const Vector& x_next);

/// Jacobian of x ↦ x′ = x + hΣb_i f(x + c_i(x′ − x)):
/// (I − hΣb_ic_if′(k_i))⁻¹(I + hΣb_i(1 − c_i)f′(k_i)).
Matrix kahan_rk_jacobian(const VectorField& field, const KahanWeights& weights, double h,
                         const Vector& x, const Vector& x_next);

/// Determinant of one application of any method (product over composed parts).
double method_det(const VectorField& field, const Method& method, const MethodStep& step);

using StepMap = std::function<Vector(const Vector&)>;

/// Central differences of the step map, column step 1e-6·(1 + |x_j|).
Matrix fd_step_jacobian(const StepMap& step_map, const Vector& x);

/// Both sides of det φ′_h(x,y) = det ψ′_h(x) · det ∂_yχ_h(·, ·) for a foliated
/// field f(x,y) = (u(x), v(x,y)).
struct FoliationFactors {
  double lhs = 0.0;
  double rhs = 0.0;
  /// ‖φ_h(x,y) − (ψ_h(x), χ-form)‖∞, the map identity behind the factorisation.
  double map_defect = 0.0;
  /// d_h, e_h, c_h of the multi-stage sum form (absent for s = 1).
  std::optional<Vector> d;
  std::optional<Vector> e;
  std::optional<Vector> c;
};

/// s = 1: any tableau and any v. s ≥ 2: the tableau must satisfy the δ-condition
/// (else DeltaConditionViolated) and v must be of sum form (else BadParams).
FoliationFactors foliation_factor_check(const VectorField& u, const CoupledMap& v,
                                        const ButcherTableau& tableau, double h, const Vector& x,
                                        const Vector& y);

}  // namespace vprk
