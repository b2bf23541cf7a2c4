#include "vprk/field.hpp"

#include <cmath>

namespace vprk {

namespace {

void check_dim(const Vector& x, Index dim, const std::string& who) {
  if (x.size() != dim) {
    raise(ErrorKind::DimensionMismatch, who + " expects dimension " + std::to_string(dim) +
                                            ", got " + std::to_string(x.size()));
  }
}

Matrix inverse_or_throw(const Matrix& p, ErrorKind kind, const std::string& what) {
  require_square(p, what);
  LuDecomposition<double> lu(p);
  if (lu.singular()) raise(kind, what + " is singular");
  return lu.solve(Matrix::Identity(p.rows(), p.cols()));
}

}  // namespace

// --- VectorField -----------------------------------------------------------

VectorField::VectorField(std::string name, Index dim, EvalFn eval, JacobianFn jacobian,
                         Smoothness smoothness)
    : name_(std::move(name)),
      dim_(dim),
      eval_(std::move(eval)),
      jacobian_(std::move(jacobian)),
      smoothness_(smoothness) {
  if (dim_ <= 0) raise(ErrorKind::BadParams, "vector field dimension must be positive");
}

VectorField VectorField::with_fd_jacobian(std::string name, Index dim, EvalFn eval) {
  auto fd = [eval](const Vector& x) { return central_difference_jacobian(eval, x); };
  VectorField f(std::move(name), dim, std::move(eval), std::move(fd));
  f.analytic_ = false;
  return f;
}

Vector VectorField::eval(const Vector& x) const {
  check_dim(x, dim_, name_);
  return eval_(x);
}

Matrix VectorField::jacobian(const Vector& x) const {
  check_dim(x, dim_, name_);
  return jacobian_(x);
}

VectorField& VectorField::attach_quadratic(std::shared_ptr<const QuadraticFieldSpec> q) {
  if (q && q->dim() != dim_) raise(ErrorKind::DimensionMismatch, "quadratic spec dimension");
  quadratic_ = std::move(q);
  return *this;
}

VectorField& VectorField::rename(std::string name) {
  name_ = std::move(name);
  return *this;
}

// --- QuadraticFieldSpec ----------------------------------------------------

QuadraticFieldSpec::QuadraticFieldSpec(std::vector<Matrix> q, Matrix l, Vector d)
    : q_(std::move(q)), l_(std::move(l)), d_(std::move(d)) {
  const Index n = d_.size();
  if (n == 0 || static_cast<Index>(q_.size()) != n || l_.rows() != n || l_.cols() != n) {
    raise(ErrorKind::DimensionMismatch, "quadratic field needs n slices q_i, L n×n and d of length n");
  }
  for (auto& slice : q_) {
    if (slice.rows() != n || slice.cols() != n) {
      raise(ErrorKind::DimensionMismatch, "quadratic coefficient slice must be n×n");
    }
    require_finite(slice, "quadratic coefficients");
    slice = 0.5 * (slice + slice.transpose()).eval();
  }
  require_finite(l_, "linear part");
  require_finite(d_, "constant part");
}

QuadraticFieldSpec QuadraticFieldSpec::affine(Matrix l, Vector d) {
  const Index n = d.size();
  return QuadraticFieldSpec(std::vector<Matrix>(static_cast<std::size_t>(n), Matrix::Zero(n, n)),
                            std::move(l), std::move(d));
}

Vector QuadraticFieldSpec::homogeneous(const Vector& x) const { return bilinear(x, x); }

Vector QuadraticFieldSpec::bilinear(const Vector& x, const Vector& y) const {
  check_dim(x, dim(), "quadratic form");
  check_dim(y, dim(), "quadratic form");
  Vector out(dim());
  for (Index i = 0; i < dim(); ++i) out(i) = x.dot(q_[static_cast<std::size_t>(i)] * y);
  return out;
}

Matrix QuadraticFieldSpec::bilinear_matrix(const Vector& x) const {
  check_dim(x, dim(), "quadratic form");
  Matrix m(dim(), dim());
  for (Index i = 0; i < dim(); ++i) m.row(i) = (q_[static_cast<std::size_t>(i)] * x).transpose();
  return m;
}

Vector QuadraticFieldSpec::eval(const Vector& x) const { return homogeneous(x) + l_ * x + d_; }

Matrix QuadraticFieldSpec::jacobian(const Vector& x) const {
  return 2.0 * bilinear_matrix(x) + l_;
}

VectorField QuadraticFieldSpec::to_field(std::string name) const {
  auto spec = std::make_shared<const QuadraticFieldSpec>(*this);
  VectorField f(
      std::move(name), dim(), [spec](const Vector& x) { return spec->eval(x); },
      [spec](const Vector& x) { return spec->jacobian(x); });
  f.attach_quadratic(spec);
  return f;
}

Vector polarize(const QuadraticFieldSpec& spec, const Vector& x, const Vector& y) {
  return spec.bilinear(x, y);
}

// --- Maps and foliations ---------------------------------------------------

VectorMap VectorMap::zero(Index in_dim, Index out_dim) {
  return {in_dim, out_dim, [out_dim](const Vector&) { return Vector(Vector::Zero(out_dim)); },
          [in_dim, out_dim](const Vector&) { return Matrix(Matrix::Zero(out_dim, in_dim)); }};
}

VectorMap VectorMap::from_quadratic(Index in_dim, std::vector<Matrix> q, Matrix l, Vector d) {
  const Index out_dim = d.size();
  if (static_cast<Index>(q.size()) != out_dim || l.rows() != out_dim || l.cols() != in_dim) {
    raise(ErrorKind::DimensionMismatch, "quadratic map coefficients");
  }
  for (auto& slice : q) slice = 0.5 * (slice + slice.transpose()).eval();
  auto qs = std::make_shared<const std::vector<Matrix>>(std::move(q));
  auto eval = [qs, l, d](const Vector& x) {
    Vector out = l * x + d;
    for (Index i = 0; i < out.size(); ++i) out(i) += x.dot((*qs)[static_cast<std::size_t>(i)] * x);
    return out;
  };
  auto jac = [qs, l](const Vector& x) {
    Matrix out = l;
    for (Index i = 0; i < out.rows(); ++i) {
      out.row(i) += 2.0 * ((*qs)[static_cast<std::size_t>(i)] * x).transpose();
    }
    return out;
  };
  return {in_dim, out_dim, std::move(eval), std::move(jac)};
}

VectorField CoupledMap::y_field(const Vector& x) const {
  auto ev = eval;
  auto jy = dy;
  return VectorField(
      "y-system", y_dim, [ev, x](const Vector& y) { return ev(x, y); },
      [jy, x](const Vector& y) { return jy(x, y); });
}

CoupledMap CoupledMap::sum_of(VectorMap w, VectorField v) {
  if (w.out_dim != v.dim()) raise(ErrorKind::DimensionMismatch, "w and ṽ must share the y dimension");
  CoupledMap out;
  out.x_dim = w.in_dim;
  out.y_dim = v.dim();
  out.eval = [w, v](const Vector& x, const Vector& y) { return Vector(w.eval(x) + v.eval(y)); };
  out.dx = [w](const Vector& x, const Vector&) { return w.jacobian(x); };
  out.dy = [v](const Vector&, const Vector& y) { return v.jacobian(y); };
  out.sum = SumParts{std::move(w), std::move(v)};
  return out;
}

VectorField foliate(const FoliationSpec& spec, std::string name) {
  const Index m = spec.u.dim();
  if (spec.v.x_dim != m) raise(ErrorKind::DimensionMismatch, "v must take x of dimension dim(u)");
  const Index n = spec.v.y_dim;
  const VectorField u = spec.u;
  const CoupledMap v = spec.v;

  auto eval = [u, v, m, n](const Vector& z) {
    const Vector x = z.head(m);
    const Vector y = z.tail(n);
    Vector out(m + n);
    out.head(m) = u.eval(x);
    out.tail(n) = v.eval(x, y);
    return out;
  };
  auto jac = [u, v, m, n](const Vector& z) {
    const Vector x = z.head(m);
    const Vector y = z.tail(n);
    Matrix out = Matrix::Zero(m + n, m + n);
    out.topLeftCorner(m, m) = u.jacobian(x);
    out.bottomLeftCorner(n, m) = v.dx(x, y);
    out.bottomRightCorner(n, n) = v.dy(x, y);
    return out;
  };
  VectorField assembled(std::move(name), m + n, std::move(eval), std::move(jac), u.smoothness());
  if (spec.p) return conjugate(assembled, *spec.p).rename(assembled.name());
  return assembled;
}

VectorField conjugate(const VectorField& f, const Matrix& p) {
  if (p.rows() != f.dim()) raise(ErrorKind::DimensionMismatch, "P must match the field dimension");
  const Matrix p_inv = inverse_or_throw(p, ErrorKind::SingularP, "change of basis P");
  auto eval = [f, p, p_inv](const Vector& z) { return Vector(p * f.eval(p_inv * z)); };
  auto jac = [f, p, p_inv](const Vector& z) { return Matrix(p * f.jacobian(p_inv * z) * p_inv); };
  VectorField out(f.name() + "~P", f.dim(), std::move(eval), std::move(jac), f.smoothness());
  if (const auto* q = f.quadratic()) {
    std::vector<Matrix> slices(static_cast<std::size_t>(f.dim()), Matrix::Zero(f.dim(), f.dim()));
    for (Index i = 0; i < f.dim(); ++i) {
      for (Index a = 0; a < f.dim(); ++a) {
        slices[static_cast<std::size_t>(i)] +=
            p(i, a) * p_inv.transpose() * q->q()[static_cast<std::size_t>(a)] * p_inv;
      }
    }
    out.attach_quadratic(std::make_shared<const QuadraticFieldSpec>(
        std::move(slices), p * q->linear() * p_inv, p * q->constant()));
  }
  return out;
}

// --- JSON helpers ----------------------------------------------------------

Matrix matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    raise(ErrorKind::BadParams, what + " must be a nested array");
  }
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      raise(ErrorKind::BadParams, what + " rows must have equal length");
    }
    for (Index k = 0; k < cols; ++k) {
      if (!row[static_cast<std::size_t>(k)].is_number()) raise(ErrorKind::BadParams, what + " entry");
      m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  require_finite(m, what);
  return m;
}

Vector vector_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) raise(ErrorKind::BadParams, what + " must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) raise(ErrorKind::BadParams, what + " entry");
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  require_finite(v, what);
  return v;
}

// --- Builtin catalogue -----------------------------------------------------

namespace {

const nlohmann::json& param(const nlohmann::json& params, const char* key) {
  static const nlohmann::json null_json;
  if (params.is_object() && params.contains(key)) return params.at(key);
  return null_json;
}

VectorField make_quad_hamiltonian(const nlohmann::json& params) {
  Matrix j = Matrix::Zero(4, 4);
  j.topRightCorner(2, 2) = Matrix::Identity(2, 2);
  j.bottomLeftCorner(2, 2) = -Matrix::Identity(2, 2);
  Matrix s(4, 4);
  s << 2.0, 0.3, 0.0, 0.1,  //
      0.3, 1.5, 0.2, 0.0,   //
      0.0, 0.2, 1.0, 0.4,   //
      0.1, 0.0, 0.4, 3.0;
  Vector d(4);
  d << 0.1, -0.2, 0.3, 0.05;

  if (const auto& pj = param(params, "J"); !pj.is_null()) j = matrix_from_json(pj, "J");
  const Index n = j.rows();
  if (const auto& ps = param(params, "S"); !ps.is_null()) {
    s = matrix_from_json(ps, "S");
  } else if (n != 4) {
    raise(ErrorKind::BadParams, "S is required when J is not the default 4×4");
  }
  if (const auto& pd = param(params, "d"); !pd.is_null()) {
    d = vector_from_json(pd, "d");
  } else if (n != 4) {
    d = Vector::Zero(n);
  }

  if (j.cols() != n || s.rows() != n || s.cols() != n || d.size() != n) {
    raise(ErrorKind::BadParams, "quad_hamiltonian needs J, S n×n and d of length n");
  }
  if (max_abs(Matrix(j + j.transpose())) > 1e-14) raise(ErrorKind::BadParams, "J is not skew-symmetric");
  if (max_abs(Matrix(s - s.transpose())) > 1e-14) raise(ErrorKind::BadParams, "S is not symmetric");
  const Matrix j_inv = inverse_or_throw(j, ErrorKind::BadParams, "J");

  auto spec = QuadraticFieldSpec::affine(j_inv * s, j_inv * d);
  return spec.to_field("quad_hamiltonian");
}

VectorField make_hlw(const nlohmann::json& params) {
  const std::string variant = param(params, "variant").is_string()
                                  ? param(params, "variant").get<std::string>()
                                  : std::string("coupled");
  if (variant == "pendulum") {
    // (q̇, ṗ) = (p, −sin q)
    return VectorField(
        "hlw_separable", 2,
        [](const Vector& z) {
          Vector f(2);
          f << z(1), -std::sin(z(0));
          return f;
        },
        [](const Vector& z) {
          Matrix m(2, 2);
          m << 0.0, 1.0, -std::cos(z(0)), 0.0;
          return m;
        });
  }
  if (variant == "coupled") {
    // x ∈ ℝ², y ∈ ℝ²: u(y) = (sin y₂ + ½y₁², cos y₁), v(x) = (x₁x₂, −sin(x₁+x₂)).
    return VectorField(
        "hlw_separable", 4,
        [](const Vector& z) {
          Vector f(4);
          f << std::sin(z(3)) + 0.5 * z(2) * z(2), std::cos(z(2)), z(0) * z(1),
              -std::sin(z(0) + z(1));
          return f;
        },
        [](const Vector& z) {
          const double cs = std::cos(z(0) + z(1));
          Matrix m = Matrix::Zero(4, 4);
          m(0, 2) = z(2);
          m(0, 3) = std::cos(z(3));
          m(1, 2) = -std::sin(z(2));
          m(2, 0) = z(1);
          m(2, 1) = z(0);
          m(3, 0) = -cs;
          m(3, 1) = -cs;
          return m;
        });
  }
  raise(ErrorKind::BadParams, "hlw_separable variant must be pendulum or coupled");
}

VectorField make_example1() {
  return VectorField(
      "example1", 3,
      [](const Vector& z) {
        Vector f(3);
        f << std::sin(z(2)), std::cos(z(2)), std::sin(z(1)) + std::cos(z(0));
        return f;
      },
      [](const Vector& z) {
        Matrix m = Matrix::Zero(3, 3);
        m(0, 2) = std::cos(z(2));
        m(1, 2) = -std::sin(z(2));
        m(2, 0) = -std::sin(z(0));
        m(2, 1) = std::cos(z(1));
        return m;
      });
}

VectorField make_example2(const nlohmann::json& params) {
  double c = 1.0;
  if (const auto& pc = param(params, "c"); !pc.is_null()) {
    if (!pc.is_number()) raise(ErrorKind::BadParams, "example2 drift c must be a number");
    c = pc.get<double>();
  }
  if (!std::isfinite(c)) raise(ErrorKind::BadParams, "example2 drift c must be finite");
  return VectorField(
      "example2", 3,
      [c](const Vector& z) {
        const double x = z(0);
        Vector f(3);
        if (x >= 0.0) {
          f << x * x * x / 3.0 - c, -x * x * z(1), 0.0;
        } else {
          f << x * x * x / 3.0 - c, 0.0, -x * x * z(2);
        }
        return f;
      },
      [](const Vector& z) {
        const double x = z(0);
        Matrix m = Matrix::Zero(3, 3);
        m(0, 0) = x * x;
        if (x >= 0.0) {
          m(1, 0) = -2.0 * x * z(1);
          m(1, 1) = -x * x;
        } else {
          m(2, 0) = -2.0 * x * z(2);
          m(2, 2) = -x * x;
        }
        return m;
      },
      Smoothness::C1);
}

VectorField harmonic_oscillator() {
  return QuadraticFieldSpec::affine((Matrix(2, 2) << 0.0, 1.0, -1.0, 0.0).finished(), Vector::Zero(2))
      .to_field("harmonic_oscillator");
}

FoliationSpec example3_foliation() {
  // v(x,y) = A(x)·(y₁³/3, y₂³/3, y₃²/2) so that ∂_y v = A(x)·diag(y₁², y₂², y₃).
  auto skew_a = [](const Vector& x) {
    Matrix a(3, 3);
    a << 0.0, x(0), x(0),  //
        -x(0), 0.0, x(0) * x(1),  //
        -x(0), -x(0) * x(1), 0.0;
    return a;
  };
  auto potential_grad = [](const Vector& y) {
    return Vector((Vector(3) << y(0) * y(0) * y(0) / 3.0, y(1) * y(1) * y(1) / 3.0, 0.5 * y(2) * y(2))
                      .finished());
  };
  CoupledMap v;
  v.x_dim = 2;
  v.y_dim = 3;
  v.eval = [skew_a, potential_grad](const Vector& x, const Vector& y) {
    return Vector(skew_a(x) * potential_grad(y));
  };
  v.dx = [potential_grad](const Vector& x, const Vector& y) {
    Matrix da1(3, 3);
    da1 << 0.0, 1.0, 1.0,  //
        -1.0, 0.0, x(1),  //
        -1.0, -x(1), 0.0;
    Matrix da2 = Matrix::Zero(3, 3);
    da2(1, 2) = x(0);
    da2(2, 1) = -x(0);
    const Vector w = potential_grad(y);
    Matrix out(3, 2);
    out.col(0) = da1 * w;
    out.col(1) = da2 * w;
    return out;
  };
  v.dy = [skew_a](const Vector& x, const Vector& y) {
    const Vector diag = (Vector(3) << y(0) * y(0), y(1) * y(1), y(2)).finished();
    return Matrix(skew_a(x) * diag.asDiagonal());
  };
  return {harmonic_oscillator(), std::move(v), std::nullopt};
}

FoliationSpec kahan_remark_foliation() {
  // x = (q_x, p_x), y = (q_y, p_y), H = (p_x q_x) p_y q_y; ẏ = (∂H/∂p_y, −∂H/∂q_y).
  CoupledMap v;
  v.x_dim = 2;
  v.y_dim = 2;
  v.eval = [](const Vector& x, const Vector& y) {
    const double a = x(0) * x(1);
    return Vector((Vector(2) << a * y(0), -a * y(1)).finished());
  };
  v.dx = [](const Vector& x, const Vector& y) {
    Matrix m(2, 2);
    m << x(1) * y(0), x(0) * y(0),  //
        -x(1) * y(1), -x(0) * y(1);
    return m;
  };
  v.dy = [](const Vector& x, const Vector&) {
    const double a = x(0) * x(1);
    return Matrix((Matrix(2, 2) << a, 0.0, 0.0, -a).finished());
  };
  return {harmonic_oscillator(), std::move(v), std::nullopt};
}

FoliationSpec sum_demo_foliation() {
  // u: harmonic oscillator; w(x) = (x₁², sin x₂); ṽ(y) = (y₂, −sin y₁) (pendulum, in 𝓓).
  VectorMap w{2, 2,
              [](const Vector& x) {
                return Vector((Vector(2) << x(0) * x(0), std::sin(x(1))).finished());
              },
              [](const Vector& x) {
                return Matrix((Matrix(2, 2) << 2.0 * x(0), 0.0, 0.0, std::cos(x(1))).finished());
              }};
  VectorField pendulum = make_hlw(nlohmann::json{{"variant", "pendulum"}}).rename("pendulum");
  return {harmonic_oscillator(), CoupledMap::sum_of(std::move(w), std::move(pendulum)), std::nullopt};
}

VectorField make_linear(const nlohmann::json& params) {
  Matrix l = (Matrix(2, 2) << 0.0, 1.0, -1.0, 0.0).finished();
  if (const auto& pl = param(params, "L"); !pl.is_null()) l = matrix_from_json(pl, "L");
  require_square(l, "L");
  Vector d = Vector::Zero(l.rows());
  if (const auto& pd = param(params, "d"); !pd.is_null()) d = vector_from_json(pd, "d");
  if (d.size() != l.rows()) raise(ErrorKind::BadParams, "linear field: d must match L");
  return QuadraticFieldSpec::affine(std::move(l), std::move(d)).to_field("linear");
}

}  // namespace

FoliationSpec builtin_foliation(const std::string& name) {
  if (name == "example3") return example3_foliation();
  if (name == "kahan_remark") return kahan_remark_foliation();
  if (name == "sum_demo") return sum_demo_foliation();
  raise(ErrorKind::UnknownField, "no foliation named " + name);
}

VectorField builtin_field(const std::string& name, const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object()) raise(ErrorKind::BadParams, "params must be an object");
  if (name == "quad_hamiltonian") return make_quad_hamiltonian(params);
  if (name == "hlw_separable") return make_hlw(params);
  if (name == "example1") return make_example1();
  if (name == "example2") return make_example2(params);
  if (name == "example3") return foliate(example3_foliation(), "example3");
  if (name == "kahan_remark") return foliate(kahan_remark_foliation(), "kahan_remark");
  if (name == "linear") return make_linear(params);
  raise(ErrorKind::UnknownField, name);
}

std::vector<std::string> builtin_field_names() {
  return {"quad_hamiltonian", "hlw_separable", "example1", "example2",
          "example3",         "kahan_remark",  "linear"};
}

VectorField field_from_json(const nlohmann::json& descriptor) {
  if (descriptor.is_string()) return builtin_field(descriptor.get<std::string>());
  if (!descriptor.is_object() || !descriptor.contains("name") || !descriptor.at("name").is_string()) {
    raise(ErrorKind::InvalidConfig, "field descriptor needs a string \"name\"");
  }
  const nlohmann::json params = descriptor.value("params", nlohmann::json::object());
  return builtin_field(descriptor.at("name").get<std::string>(), params);
}

}  // namespace vprk
