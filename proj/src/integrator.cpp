#include "vprk/integrator.hpp"

#include <cmath>

namespace vprk {

namespace {

void check_step_args(Index dim, double h, const Vector& x) {
  if (!std::isfinite(h) || h == 0.0) raise(ErrorKind::BadParams, "step size must be finite and nonzero");
  if (x.size() != dim) {
    raise(ErrorKind::DimensionMismatch, "state has dimension " + std::to_string(x.size()) +
                                            ", field has " + std::to_string(dim));
  }
  require_finite(x, "state");
}

}  // namespace

StepResult rk_step(const VectorField& field, const ButcherTableau& tableau, double h,
                   const Vector& x, const NewtonOptions& options) {
  const Index n = field.dim();
  check_step_args(n, h, x);
  const Index s = tableau.stages();
  const Matrix& a = tableau.a();
  const double tol = options.tolerance * (1.0 + max_abs(x));

  std::vector<Vector> k(static_cast<std::size_t>(s), x);
  std::vector<Vector> fk(static_cast<std::size_t>(s));
  Vector residual(s * n);
  Matrix newton(s * n, s * n);

  StageLinearization lin;
  lin.h = h;
  for (int iter = 0;; ++iter) {
    for (Index j = 0; j < s; ++j) fk[static_cast<std::size_t>(j)] = field.eval(k[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < s; ++i) {
      Vector r = k[static_cast<std::size_t>(i)] - x;
      for (Index j = 0; j < s; ++j) r -= h * a(i, j) * fk[static_cast<std::size_t>(j)];
      residual.segment(i * n, n) = r;
    }
    const double res = max_abs(residual);
    if (!std::isfinite(res)) raise(ErrorKind::NewtonDivergence, "stage residual is not finite");
    lin.residual = res;
    lin.newton_iters = iter;
    if (res <= tol) break;
    if (iter == options.max_iters) {
      raise(ErrorKind::NewtonDivergence, "stage residual " + std::to_string(res) + " after " +
                                             std::to_string(iter) + " iterations");
    }

    // I_sn − h(A⊗I)F
    newton.setIdentity();
    for (Index j = 0; j < s; ++j) {
      const Matrix jac = field.jacobian(k[static_cast<std::size_t>(j)]);
      for (Index i = 0; i < s; ++i) newton.block(i * n, j * n, n, n) -= h * a(i, j) * jac;
    }
    LuDecomposition<double> lu(newton);
    if (lu.singular()) raise(ErrorKind::SingularNewtonMatrix, "stage Jacobian is singular; reduce h");
    const Vector delta = lu.solve(residual);
    for (Index i = 0; i < s; ++i) k[static_cast<std::size_t>(i)] -= delta.segment(i * n, n);
  }

  lin.converged = true;
  lin.f_blocks = Matrix::Zero(s * n, s * n);
  Vector increment = Vector::Zero(n);
  for (Index i = 0; i < s; ++i) {
    lin.f_blocks.block(i * n, i * n, n, n) = field.jacobian(k[static_cast<std::size_t>(i)]);
    increment += tableau.b()(i) * fk[static_cast<std::size_t>(i)];
  }
  lin.stages = std::move(k);
  return {x + h * increment, std::move(lin)};
}

StepResult kahan_step(const QuadraticFieldSpec& spec, double h, const Vector& x) {
  const Index n = spec.dim();
  check_step_args(n, h, x);
  const Matrix system = Matrix::Identity(n, n) - 0.5 * h * spec.jacobian(x);
  const Vector rhs = x + 0.5 * h * spec.linear() * x + h * spec.constant();
  LuDecomposition<double> lu(system);
  if (lu.singular()) raise(ErrorKind::SingularKahanMatrix, "I − (h/2)f′(x) is singular");
  Vector next = lu.solve(rhs);

  const Vector defect = next - x -
                        h * (spec.bilinear(x, next) + 0.5 * spec.linear() * (x + next) + spec.constant());
  if (!(max_abs(defect) <= 1e-12 * (1.0 + max_abs(x) + max_abs(next)))) {
    raise(ErrorKind::SingularKahanMatrix, "Kahan relation residual " + std::to_string(max_abs(defect)));
  }
  return {std::move(next), std::nullopt};
}

Eigen::Vector3d KahanWeights::moments() const {
  return {b.sum() - 1.0, b.dot(c) - 0.5, b.dot(c.cwiseProduct(c))};
}

void KahanWeights::validate() const {
  if (b.size() != c.size() || b.size() == 0) raise(ErrorKind::BadParams, "Kahan weights b and c differ in length");
  if (moments().cwiseAbs().maxCoeff() > 1e-12) {
    raise(ErrorKind::BadParams, "Kahan weights violate Σb = 1, Σbc = ½, Σbc² = 0");
  }
}

KahanWeights kahan_weights(Index s) {
  if (s < 3) raise(ErrorKind::BadParams, "Kahan weights need at least 3 stages");
  if (s == 3) return {Vector((Vector(3) << -0.5, 2.0, -0.5).finished()), Vector((Vector(3) << 0.0, 0.5, 1.0).finished())};
  Vector c(s);
  c.head(3) << 0.0, 0.5, 1.0;
  for (Index i = 3; i < s; ++i) c(i) = -static_cast<double>(i - 2);
  Matrix v(3, s);
  v.row(0).setOnes();
  v.row(1) = c.transpose();
  v.row(2) = c.cwiseProduct(c).transpose();
  const Eigen::Vector3d target(1.0, 0.5, 0.0);
  const Vector y = lu_solve(Matrix(v * v.transpose()), target);
  return {v.transpose() * y, std::move(c)};
}

ButcherTableau kahan_tableau(const KahanWeights& weights) {
  return ButcherTableau(weights.c * weights.b.transpose(), weights.b, "kahan_rk");
}

StepResult kahan_rk_step(const VectorField& field, const KahanWeights& weights, double h,
                         const Vector& x, const NewtonOptions& options) {
  const Index n = field.dim();
  check_step_args(n, h, x);
  weights.validate();
  const Index s = weights.b.size();
  const double tol = options.tolerance * (1.0 + max_abs(x));

  Vector next = x;
  std::vector<Vector> k(static_cast<std::size_t>(s));
  std::vector<Vector> fk(static_cast<std::size_t>(s));
  StageLinearization lin;
  lin.h = h;
  for (int iter = 0;; ++iter) {
    Vector g = next - x;
    for (Index i = 0; i < s; ++i) {
      k[static_cast<std::size_t>(i)] = x + weights.c(i) * (next - x);
      fk[static_cast<std::size_t>(i)] = field.eval(k[static_cast<std::size_t>(i)]);
      g -= h * weights.b(i) * fk[static_cast<std::size_t>(i)];
    }
    const double res = max_abs(g);
    if (!std::isfinite(res)) raise(ErrorKind::NewtonDivergence, "Kahan-RK residual is not finite");
    lin.residual = res;
    lin.newton_iters = iter;
    if (res <= tol) break;
    if (iter == options.max_iters) raise(ErrorKind::NewtonDivergence, "Kahan-RK Newton did not converge");

    Matrix jac = Matrix::Identity(n, n);
    for (Index i = 0; i < s; ++i) {
      jac -= h * weights.b(i) * weights.c(i) * field.jacobian(k[static_cast<std::size_t>(i)]);
    }
    LuDecomposition<double> lu(jac);
    if (lu.singular()) raise(ErrorKind::SingularNewtonMatrix, "Kahan-RK Jacobian is singular");
    next -= lu.solve(g);
  }

  // Report stages consistent with the final iterate.
  Vector increment = Vector::Zero(n);
  lin.f_blocks = Matrix::Zero(s * n, s * n);
  for (Index i = 0; i < s; ++i) {
    lin.f_blocks.block(i * n, i * n, n, n) = field.jacobian(k[static_cast<std::size_t>(i)]);
    increment += weights.b(i) * fk[static_cast<std::size_t>(i)];
  }
  lin.converged = true;
  lin.stages = std::move(k);
  return {x + h * increment, std::move(lin)};
}

StepResult kahan_rk_step(const QuadraticFieldSpec& spec, const KahanWeights& weights, double h,
                         const Vector& x, const NewtonOptions& options) {
  return kahan_rk_step(spec.to_field(), weights, h, x, options);
}

// --- Methods -----------------------------------------------------------------

Method method_from_name(const std::string& name) {
  for (const std::string sep : {"*", "∘"}) {
    if (const auto pos = name.find(sep); pos != std::string::npos) {
      // a∘b: b first, then a.
      const Method outer = method_from_name(name.substr(0, pos));
      const Method inner = method_from_name(name.substr(pos + sep.size()));
      Composition comp;
      for (const Method* m : {&inner, &outer}) {
        if (const auto* t = std::get_if<ButcherTableau>(m)) {
          comp.tableaux.push_back(*t);
        } else if (const auto* c = std::get_if<Composition>(m)) {
          comp.tableaux.insert(comp.tableaux.end(), c->tableaux.begin(), c->tableaux.end());
        } else {
          raise(ErrorKind::UnknownMethod, "only RK tableaux can be composed: " + name);
        }
      }
      return comp;
    }
  }
  if (name == "kahan") return KahanMethod{};
  if (name == "kahan_rk") return KahanRkMethod{kahan_weights(3)};
  try {
    return builtin_tableau(name);
  } catch (const Error&) {
    raise(ErrorKind::UnknownMethod, name);
  }
}

std::string method_name(const Method& method) {
  if (const auto* t = std::get_if<ButcherTableau>(&method)) return t->name();
  if (const auto* c = std::get_if<Composition>(&method)) {
    std::string out;
    for (auto it = c->tableaux.rbegin(); it != c->tableaux.rend(); ++it) {
      if (!out.empty()) out += "*";
      out += it->name();
    }
    return out;
  }
  if (std::holds_alternative<KahanMethod>(method)) return "kahan";
  return "kahan_rk";
}

MethodStep step(const VectorField& field, const Method& method, double h, const Vector& x) {
  MethodStep out{h, x, x, {}};
  if (const auto* t = std::get_if<ButcherTableau>(&method)) {
    out.parts.push_back(rk_step(field, *t, h, x));
  } else if (const auto* c = std::get_if<Composition>(&method)) {
    Vector current = x;
    for (const auto& tableau : c->tableaux) {
      out.parts.push_back(rk_step(field, tableau, h, current));
      current = out.parts.back().x_next;
    }
  } else if (std::holds_alternative<KahanMethod>(method)) {
    const QuadraticFieldSpec* spec = field.quadratic();
    if (spec == nullptr) raise(ErrorKind::BadParams, "Kahan's method needs a quadratic field; use kahan_rk");
    out.parts.push_back(kahan_step(*spec, h, x));
  } else {
    out.parts.push_back(kahan_rk_step(field, std::get<KahanRkMethod>(method).weights, h, x));
  }
  out.x_next = out.parts.back().x_next;
  return out;
}

Trajectory trajectory(const VectorField& field, const Method& method, double h, const Vector& x0,
                      std::size_t n_steps) {
  if (n_steps == 0) raise(ErrorKind::BadParams, "trajectory needs at least one step");
  Trajectory out;
  out.steps.reserve(n_steps);
  Vector x = x0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    try {
      out.steps.push_back(step(field, method, h, x));
    } catch (const Error& e) {
      out.failure = StepFailure{i, e.kind(), e.what()};
      break;
    }
    x = out.steps.back().x_next;
  }
  return out;
}

}  // namespace vprk
