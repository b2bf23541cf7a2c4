#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vprk/finite_difference.hpp"
#include "vprk/linalg.hpp"

namespace vprk {

enum class Smoothness { Smooth, C1 };

class QuadraticFieldSpec;

/// An autonomous vector field x ↦ f(x) on ℝⁿ together with its Jacobian f′(x).
class VectorField {
 public:
  using EvalFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  VectorField(std::string name, Index dim, EvalFn eval, JacobianFn jacobian,
              Smoothness smoothness = Smoothness::Smooth);

  /// User field without an analytic Jacobian; f′ falls back to central
  /// differences and `analytic_jacobian()` reports false.
  static VectorField with_fd_jacobian(std::string name, Index dim, EvalFn eval);

  const std::string& name() const { return name_; }
  Index dim() const { return dim_; }
  Smoothness smoothness() const { return smoothness_; }
  bool analytic_jacobian() const { return analytic_; }

  Vector eval(const Vector& x) const;
  Vector operator()(const Vector& x) const { return eval(x); }
  Matrix jacobian(const Vector& x) const;

  /// Non-null when the field is known to be quadratic.
  const QuadraticFieldSpec* quadratic() const { return quadratic_.get(); }
  VectorField& attach_quadratic(std::shared_ptr<const QuadraticFieldSpec> q);
  VectorField& rename(std::string name);

 private:
  std::string name_;
  Index dim_;
  EvalFn eval_;
  JacobianFn jacobian_;
  Smoothness smoothness_;
  bool analytic_ = true;
  std::shared_ptr<const QuadraticFieldSpec> quadratic_;
};

/// f(x) = Q(x) + Lx + d with Q(x)_i = Σ_jk q_{i,jk} x_j x_k. The coefficient
/// slices q_i are symmetrised on construction.
class QuadraticFieldSpec {
 public:
  QuadraticFieldSpec(std::vector<Matrix> q, Matrix l, Vector d);

  static QuadraticFieldSpec affine(Matrix l, Vector d);

  Index dim() const { return d_.size(); }
  const std::vector<Matrix>& q() const { return q_; }
  const Matrix& linear() const { return l_; }
  const Vector& constant() const { return d_; }

  /// Q(x).
  Vector homogeneous(const Vector& x) const;
  /// The symmetric bilinear form with q(x,x) = Q(x).
  Vector bilinear(const Vector& x, const Vector& y) const;
  /// The matrix M(x) with q(x,y) = M(x)·y.
  Matrix bilinear_matrix(const Vector& x) const;

  Vector eval(const Vector& x) const;
  /// f′(x) = 2q(x,·) + L, affine in x.
  Matrix jacobian(const Vector& x) const;

  VectorField to_field(std::string name = "quadratic") const;

 private:
  std::vector<Matrix> q_;
  Matrix l_;
  Vector d_;
};

/// q(x,y) = ½(Q(x+y) − Q(x) − Q(y)).
Vector polarize(const QuadraticFieldSpec& spec, const Vector& x, const Vector& y);

/// A map ℝᵐ → ℝⁿ with Jacobian (not necessarily square).
struct VectorMap {
  Index in_dim = 0;
  Index out_dim = 0;
  std::function<Vector(const Vector&)> eval;
  std::function<Matrix(const Vector&)> jacobian;

  static VectorMap zero(Index in_dim, Index out_dim);
  static VectorMap from_quadratic(Index in_dim, std::vector<Matrix> q, Matrix l, Vector d);
};

/// The y-dynamics v(x,y) of a foliated field, with both partial Jacobians.
struct CoupledMap {
  Index x_dim = 0;
  Index y_dim = 0;
  std::function<Vector(const Vector&, const Vector&)> eval;
  std::function<Matrix(const Vector&, const Vector&)> dx;
  std::function<Matrix(const Vector&, const Vector&)> dy;

  /// Present when v(x,y) = w(x) + ṽ(y).
  struct SumParts {
    VectorMap w;
    VectorField v;
  };
  std::optional<SumParts> sum;

  /// y ↦ v(x, y) with x frozen as a parameter.
  VectorField y_field(const Vector& x) const;

  static CoupledMap sum_of(VectorMap w, VectorField v);
};

/// f(x,y) = (u(x), v(x,y)), optionally conjugated by P.
struct FoliationSpec {
  VectorField u;
  CoupledMap v;
  std::optional<Matrix> p;
};

/// Assembles the foliated field and, when P is supplied, returns
/// z ↦ P f(P⁻¹z). Throws SingularP.
VectorField foliate(const FoliationSpec& spec, std::string name = "foliation");

/// z ↦ P f(P⁻¹z); keeps the quadratic description when f has one.
VectorField conjugate(const VectorField& f, const Matrix& p);

/// Builtin catalogue: quad_hamiltonian, hlw_separable, example1, example2,
/// example3, kahan_remark, linear. `params` may be null for defaults.
VectorField builtin_field(const std::string& name, const nlohmann::json& params = {});

/// The foliation structure behind the builtin foliated fields: example3,
/// kahan_remark, and sum_demo (a v(x,y) = w(x) + ṽ(y) field).
FoliationSpec builtin_foliation(const std::string& name);

std::vector<std::string> builtin_field_names();

/// {"name": ..., "params": {...}}.
VectorField field_from_json(const nlohmann::json& descriptor);

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);
Vector vector_from_json(const nlohmann::json& j, const std::string& what);

}  // namespace vprk
