#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vprk/jacobian.hpp"

namespace vprk {

enum class DensityKind {
  Unit,
  TrapezoidalPlus,
  TrapezoidalMinus,
  KahanPlus,
  KahanMinus,
  Product,
  Conjugated,
};

std::string to_string(DensityKind kind);

/// A density μ on phase space. The trapezoidal and Kahan kinds are
/// det(I ± (h/2)f′(x)) and its reciprocal, bound to one field and one h.
class DensitySpec {
 public:
  static DensitySpec unit();
  /// sign = +1 or −1.
  static DensitySpec trapezoidal(const VectorField& field, double h, int sign);
  static DensitySpec kahan(const VectorField& field, double h, int sign);
  /// ρ(x)·ν(y) with x the first `split` coordinates.
  static DensitySpec product(const DensitySpec& rho, const DensitySpec& nu, Index split);
  /// μ(P⁻¹x). Throws SingularP.
  static DensitySpec conjugated(const DensitySpec& mu, const Matrix& p);
  /// unit | trapezoidal_plus | trapezoidal_minus | kahan_plus | kahan_minus.
  static DensitySpec from_name(const std::string& kind, const VectorField& field, double h);

  DensityKind kind() const { return kind_; }
  /// The bound step size, if any part of the density depends on h.
  std::optional<double> h() const;

  /// Throws NonpositiveDensity when μ(x) ≤ 0 or is not finite.
  double eval(const Vector& x) const;
  double operator()(const Vector& x) const { return eval(x); }

 private:
  explicit DensitySpec(DensityKind kind) : kind_(kind) {}
  double raw(const Vector& x) const;

  DensityKind kind_;
  std::optional<VectorField> field_;
  double h_ = 0.0;
  int sign_ = 1;
  std::shared_ptr<const DensitySpec> first_;
  std::shared_ptr<const DensitySpec> second_;
  Index split_ = 0;
  Matrix p_inv_;
};

double density_eval(const DensitySpec& density, const Vector& x);

/// |det φ′(x)·μ(φ(x)) − μ(x)| / μ(x). `h_step` must equal the density's
/// bound h (StepSizeMismatch otherwise).
double measure_residual(const DensitySpec& density, double h_step, const Vector& x,
                        const Vector& x_next, double jac_det);

struct MeasureStep {
  Vector x_next;
  double det_phi = 1.0;
  double residual = 0.0;
};

/// One step of `method` from x, its determinant and the density residual.
MeasureStep measure_step(const VectorField& field, const Method& method, const DensitySpec& density,
                         double h, const Vector& x);

/// Largest residual over `samples`.
double max_measure_residual(const VectorField& field, const Method& method, const DensitySpec& density,
                            double h, const std::vector<Vector>& samples);

/// Product density ρ(x)ν(y) under a 1-stage method on (u(x), v(x,y)).
/// Samples are points z = (x, y). Throws BadParams for s ≠ 1.
double product_measure_check(const VectorField& u, const DensitySpec& rho, const CoupledMap& v,
                             const DensitySpec& nu, const ButcherTableau& tableau, double h,
                             const std::vector<Vector>& samples);

/// w(x)_i = xᵀq_i x + (Lx)_i + d_i from ℝᵐ to ℝⁿ.
struct QuadraticMap {
  std::vector<Matrix> q;
  Matrix l;
  Vector d;

  Index in_dim() const { return l.cols(); }
  Index out_dim() const { return d.size(); }
  VectorMap to_map() const;
};

/// The quadratic field (u(x), v(y) + w(x)).
QuadraticFieldSpec assemble_linear_foliation(const QuadraticFieldSpec& u, const QuadraticFieldSpec& v,
                                             const QuadraticMap& w);

/// Kahan's method on (u(x), v(y) + w(x)) with μ = det(I + (h/2)f′)⁻¹; returns
/// the largest residual over samples z = (x, y).
double kahan_foliation_check(const QuadraticFieldSpec& u, const QuadraticFieldSpec& v,
                             const QuadraticMap& w, double h, const std::vector<Vector>& samples);

/// Experimental: arbitrary smooth w, stepped with the generalized Kahan method.
double kahan_foliation_check(const QuadraticFieldSpec& u, const QuadraticFieldSpec& v, const VectorMap& w,
                             double h, const std::vector<Vector>& samples,
                             const KahanWeights& weights = kahan_weights(3));

/// Quadratic fields satisfying the determinant condition, n ∈ {1, …, 4}.
/// Even n: Hamiltonian J∇H with cubic H. Odd n ≥ 3: a 2-D Hamiltonian block
/// driving the remaining coordinate through a quadratic w(x). With
/// `conjugated`, the result is further conjugated by a random P.
QuadraticFieldSpec random_quadratic_d_field(Index n, std::uint64_t seed, bool conjugated = false);

/// The default seeded suite: dimensions cycle through 2, 3, 4, every other
/// field is conjugated.
std::vector<QuadraticFieldSpec> quadratic_d_suite(std::size_t count, std::uint64_t seed);

}  // namespace vprk
