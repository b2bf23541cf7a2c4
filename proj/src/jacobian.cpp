#include "vprk/jacobian.hpp"

#include <cmath>

namespace vprk {

namespace {

Matrix stage_matrix(const Matrix& coeffs, const Matrix& f_blocks, double h, Index n) {
  const Index sn = f_blocks.rows();
  return Matrix::Identity(sn, sn) - h * kron(coeffs, Matrix::Identity(n, n)) * f_blocks;
}

void check_lin(const ButcherTableau& tableau, const StageLinearization& lin, Index n) {
  if (!lin.converged) raise(ErrorKind::BadParams, "stage linearisation is not converged");
  if (lin.f_blocks.rows() != tableau.stages() * n) {
    raise(ErrorKind::DimensionMismatch, "stage linearisation does not match tableau and field");
  }
}

}  // namespace

Matrix rk_jacobian(const VectorField& field, const ButcherTableau& tableau,
                   const StageLinearization& lin) {
  const Index n = field.dim();
  const Index s = tableau.stages();
  check_lin(tableau, lin, n);
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix u = stage_matrix(tableau.a(), lin.f_blocks, lin.h, n);
  LuDecomposition<double> lu(u);
  if (lu.singular()) raise(ErrorKind::SingularStageMatrix, "I − h(A⊗I)F is singular");
  const Matrix k_prime = lu.solve(kron(Matrix::Ones(s, 1), eye));
  return eye + lin.h * kron(Matrix(tableau.b().transpose()), eye) * lin.f_blocks * k_prime;
}

VolumeReport rk_det(const VectorField& field, const ButcherTableau& tableau,
                    const StageLinearization& lin) {
  const Index n = field.dim();
  const Index s = tableau.stages();
  check_lin(tableau, lin, n);
  const Matrix shifted = tableau.a() - Matrix::Ones(s, 1) * tableau.b().transpose();

  VolumeReport report;
  report.det_denominator = det(stage_matrix(tableau.a(), lin.f_blocks, lin.h, n));
  if (report.det_denominator == 0.0) raise(ErrorKind::SingularStageMatrix, "I − h(A⊗I)F is singular");
  report.det_numerator = det(stage_matrix(shifted, lin.f_blocks, lin.h, n));
  report.det_phi = report.det_numerator / report.det_denominator;
  report.det_jacobian = det(rk_jacobian(field, tableau, lin));
  report.abs_dev_from_one = std::abs(report.det_phi - 1.0);
  return report;
}

VolumeReport rk_volume(const VectorField& field, const ButcherTableau& tableau, double h,
                       const Vector& x, bool with_oracle) {
  const StepResult result = rk_step(field, tableau, h, x);
  VolumeReport report = rk_det(field, tableau, *result.stage_lin);
  if (with_oracle) {
    report.fd_det = det(fd_step_jacobian(
        [&](const Vector& p) { return rk_step(field, tableau, h, p).x_next; }, x));
  }
  return report;
}

Matrix kahan_jacobian(const QuadraticFieldSpec& spec, double h, const Vector& x, const Vector& x_next) {
  const Index n = spec.dim();
  const Matrix eye = Matrix::Identity(n, n);
  LuDecomposition<double> lu(Matrix(eye - 0.5 * h * spec.jacobian(x)));
  if (lu.singular()) raise(ErrorKind::SingularDenominator, "I − (h/2)f′(x) is singular");
  return lu.solve(Matrix(eye + 0.5 * h * spec.jacobian(x_next)));
}

double kahan_det(const QuadraticFieldSpec& spec, double h, const Vector& x, const Vector& x_next) {
  const Index n = spec.dim();
  const Matrix eye = Matrix::Identity(n, n);
  const double den = det(Matrix(eye - 0.5 * h * spec.jacobian(x)));
  if (den == 0.0) raise(ErrorKind::SingularDenominator, "det(I − (h/2)f′(x)) = 0");
  return det(Matrix(eye + 0.5 * h * spec.jacobian(x_next))) / den;
}

Matrix kahan_rk_jacobian(const VectorField& field, const KahanWeights& weights, double h,
                         const Vector& x, const Vector& x_next) {
  const Index n = field.dim();
  Matrix lhs = Matrix::Identity(n, n);
  Matrix rhs = Matrix::Identity(n, n);
  for (Index i = 0; i < weights.b.size(); ++i) {
    const Matrix jac = field.jacobian(Vector(x + weights.c(i) * (x_next - x)));
    lhs -= h * weights.b(i) * weights.c(i) * jac;
    rhs += h * weights.b(i) * (1.0 - weights.c(i)) * jac;
  }
  LuDecomposition<double> lu(lhs);
  if (lu.singular()) raise(ErrorKind::SingularDenominator, "I − hΣb_ic_if′(k_i) is singular");
  return lu.solve(rhs);
}

double method_det(const VectorField& field, const Method& method, const MethodStep& step) {
  if (const auto* t = std::get_if<ButcherTableau>(&method)) {
    return rk_det(field, *t, *step.parts.front().stage_lin).det_phi;
  }
  if (const auto* c = std::get_if<Composition>(&method)) {
    double product = 1.0;
    for (std::size_t i = 0; i < c->tableaux.size(); ++i) {
      product *= rk_det(field, c->tableaux[i], *step.parts[i].stage_lin).det_phi;
    }
    return product;
  }
  if (std::holds_alternative<KahanMethod>(method)) {
    return kahan_det(*field.quadratic(), step.h, step.x, step.x_next);
  }
  const auto& weights = std::get<KahanRkMethod>(method).weights;
  return det(kahan_rk_jacobian(field, weights, step.h, step.x, step.x_next));
}

Matrix fd_step_jacobian(const StepMap& step_map, const Vector& x) {
  return central_difference_jacobian(step_map, x);
}

FoliationFactors foliation_factor_check(const VectorField& u, const CoupledMap& v,
                                        const ButcherTableau& tableau, double h, const Vector& x,
                                        const Vector& y) {
  const Index m = u.dim();
  const Index n = v.y_dim;
  if (x.size() != m || y.size() != n || v.x_dim != m) {
    raise(ErrorKind::DimensionMismatch, "foliation check: x, y do not match u, v");
  }
  const Index s = tableau.stages();

  std::optional<Vector> delta;
  if (s >= 2) {
    DeltaCondition cond = delta_condition(tableau);
    if (!cond.satisfied) {
      raise(ErrorKind::DeltaConditionViolated,
            "tableau " + tableau.name() + " is confluent or has pair-dependent δ_j(i,k)");
    }
    if (!v.sum) raise(ErrorKind::BadParams, "multi-stage factorisation needs v(x,y) = w(x) + ṽ(y)");
    delta = std::move(cond.delta);
  }

  const VectorField full = foliate(FoliationSpec{u, v, std::nullopt});
  Vector z(m + n);
  z << x, y;
  const StepResult full_step = rk_step(full, tableau, h, z);
  const StepResult psi = rk_step(u, tableau, h, x);
  const double det_psi = rk_det(u, tableau, *psi.stage_lin).det_phi;

  FoliationFactors out;
  out.lhs = rk_det(full, tableau, *full_step.stage_lin).det_phi;

  if (s == 1) {
    const VectorField chi_field = v.y_field(psi.stage_lin->stages.front());
    const StepResult chi = rk_step(chi_field, tableau, h, y);
    out.rhs = det_psi * rk_det(chi_field, tableau, *chi.stage_lin).det_phi;
    Vector predicted(m + n);
    predicted << psi.x_next, chi.x_next;
    out.map_defect = max_abs(Vector(full_step.x_next - predicted));
    return out;
  }

  const auto& parts = *v.sum;
  const auto& ks = psi.stage_lin->stages;
  std::vector<Vector> wk;
  wk.reserve(ks.size());
  for (const auto& k : ks) wk.push_back(parts.w.eval(k));

  Vector d = Vector::Zero(n);
  for (Index j = 0; j < s; ++j) d += (*delta)(j) * wk[static_cast<std::size_t>(j)];
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < s; ++j) e += tableau.a()(0, j) * (wk[static_cast<std::size_t>(j)] - d);
  Vector c = -e;
  for (Index i = 0; i < s; ++i) c += tableau.b()(i) * (wk[static_cast<std::size_t>(i)] - d);

  // χ_h(d, ·) integrates ẏ = d + ṽ(y).
  const VectorField& vt = parts.v;
  const VectorField shifted(
      "shifted", n, [vt, d](const Vector& q) { return Vector(d + vt.eval(q)); },
      [vt](const Vector& q) { return vt.jacobian(q); });
  const StepResult chi = rk_step(shifted, tableau, h, Vector(y + h * e));
  out.rhs = det_psi * rk_det(shifted, tableau, *chi.stage_lin).det_phi;

  Vector predicted(m + n);
  predicted << psi.x_next, chi.x_next + h * c;
  out.map_defect = max_abs(Vector(full_step.x_next - predicted));
  out.d = std::move(d);
  out.e = std::move(e);
  out.c = std::move(c);
  return out;
}

}  // namespace vprk
