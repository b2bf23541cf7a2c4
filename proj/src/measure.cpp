#include "vprk/measure.hpp"

#include <algorithm>
#include <cmath>

#include "vprk/random.hpp"

namespace vprk {

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::Unit: return "unit";
    case DensityKind::TrapezoidalPlus: return "trapezoidal_plus";
    case DensityKind::TrapezoidalMinus: return "trapezoidal_minus";
    case DensityKind::KahanPlus: return "kahan_plus";
    case DensityKind::KahanMinus: return "kahan_minus";
    case DensityKind::Product: return "product";
    case DensityKind::Conjugated: return "conjugated";
  }
  return "unknown";
}

// --- DensitySpec --------------------------------------------------------------

namespace {

void check_h(double h) {
  if (!std::isfinite(h) || h == 0.0) raise(ErrorKind::BadParams, "density step size must be finite and nonzero");
}

void check_sign(int sign) {
  if (sign != 1 && sign != -1) raise(ErrorKind::BadParams, "density sign must be +1 or -1");
}

}  // namespace

DensitySpec DensitySpec::unit() { return DensitySpec(DensityKind::Unit); }

DensitySpec DensitySpec::trapezoidal(const VectorField& field, double h, int sign) {
  check_h(h);
  check_sign(sign);
  DensitySpec d(sign > 0 ? DensityKind::TrapezoidalPlus : DensityKind::TrapezoidalMinus);
  d.field_ = field;
  d.h_ = h;
  d.sign_ = sign;
  return d;
}

DensitySpec DensitySpec::kahan(const VectorField& field, double h, int sign) {
  check_h(h);
  check_sign(sign);
  DensitySpec d(sign > 0 ? DensityKind::KahanPlus : DensityKind::KahanMinus);
  d.field_ = field;
  d.h_ = h;
  d.sign_ = sign;
  return d;
}

DensitySpec DensitySpec::product(const DensitySpec& rho, const DensitySpec& nu, Index split) {
  if (split < 0) raise(ErrorKind::BadParams, "product split must be non-negative");
  const auto h_rho = rho.h();
  const auto h_nu = nu.h();
  if (h_rho && h_nu && *h_rho != *h_nu) {
    raise(ErrorKind::StepSizeMismatch, "product density factors are bound to different h");
  }
  DensitySpec d(DensityKind::Product);
  d.first_ = std::make_shared<const DensitySpec>(rho);
  d.second_ = std::make_shared<const DensitySpec>(nu);
  d.split_ = split;
  return d;
}

DensitySpec DensitySpec::conjugated(const DensitySpec& mu, const Matrix& p) {
  require_square(p, "P");
  LuDecomposition<double> lu(p);
  if (lu.singular()) raise(ErrorKind::SingularP, "change of basis P is singular");
  DensitySpec d(DensityKind::Conjugated);
  d.first_ = std::make_shared<const DensitySpec>(mu);
  d.p_inv_ = lu.solve(Matrix::Identity(p.rows(), p.cols()));
  return d;
}

DensitySpec DensitySpec::from_name(const std::string& kind, const VectorField& field, double h) {
  if (kind == "unit") return unit();
  if (kind == "trapezoidal_plus") return trapezoidal(field, h, +1);
  if (kind == "trapezoidal_minus") return trapezoidal(field, h, -1);
  if (kind == "kahan_plus") return kahan(field, h, +1);
  if (kind == "kahan_minus") return kahan(field, h, -1);
  raise(ErrorKind::InvalidConfig, "unknown density kind " + kind);
}

std::optional<double> DensitySpec::h() const {
  switch (kind_) {
    case DensityKind::Unit: return std::nullopt;
    case DensityKind::Product: {
      if (auto h = first_->h()) return h;
      return second_->h();
    }
    case DensityKind::Conjugated: return first_->h();
    default: return h_;
  }
}

double DensitySpec::raw(const Vector& x) const {
  switch (kind_) {
    case DensityKind::Unit: return 1.0;
    case DensityKind::TrapezoidalPlus:
    case DensityKind::TrapezoidalMinus:
    case DensityKind::KahanPlus:
    case DensityKind::KahanMinus: {
      const Matrix jac = field_->jacobian(x);
      const double value = det(Matrix(Matrix::Identity(jac.rows(), jac.cols()) + sign_ * 0.5 * h_ * jac));
      const bool reciprocal = kind_ == DensityKind::KahanPlus || kind_ == DensityKind::KahanMinus;
      if (reciprocal) return value == 0.0 ? 0.0 : 1.0 / value;
      return value;
    }
    case DensityKind::Product: {
      if (split_ > x.size()) raise(ErrorKind::DimensionMismatch, "product density split exceeds dimension");
      return first_->raw(x.head(split_)) * second_->raw(x.tail(x.size() - split_));
    }
    case DensityKind::Conjugated: {
      if (p_inv_.cols() != x.size()) raise(ErrorKind::DimensionMismatch, "conjugated density dimension");
      return first_->raw(p_inv_ * x);
    }
  }
  return 0.0;
}

double DensitySpec::eval(const Vector& x) const {
  const double value = raw(x);
  if (!(value > 0.0) || !std::isfinite(value)) {
    raise(ErrorKind::NonpositiveDensity, to_string(kind_) + " density is " + std::to_string(value));
  }
  return value;
}

double density_eval(const DensitySpec& density, const Vector& x) { return density.eval(x); }

double measure_residual(const DensitySpec& density, double h_step, const Vector& x, const Vector& x_next,
                        double jac_det) {
  if (const auto h = density.h(); h && *h != h_step) {
    raise(ErrorKind::StepSizeMismatch,
          "density bound to h=" + std::to_string(*h) + ", step uses h=" + std::to_string(h_step));
  }
  const double mu = density.eval(x);
  return std::abs(jac_det * density.eval(x_next) - mu) / mu;
}

MeasureStep measure_step(const VectorField& field, const Method& method, const DensitySpec& density,
                         double h, const Vector& x) {
  const MethodStep s = step(field, method, h, x);
  MeasureStep out;
  out.det_phi = method_det(field, method, s);
  out.residual = measure_residual(density, h, x, s.x_next, out.det_phi);
  out.x_next = s.x_next;
  return out;
}

double max_measure_residual(const VectorField& field, const Method& method, const DensitySpec& density,
                            double h, const std::vector<Vector>& samples) {
  double worst = 0.0;
  for (const auto& x : samples) worst = std::max(worst, measure_step(field, method, density, h, x).residual);
  return worst;
}

double product_measure_check(const VectorField& u, const DensitySpec& rho, const CoupledMap& v,
                             const DensitySpec& nu, const ButcherTableau& tableau, double h,
                             const std::vector<Vector>& samples) {
  if (tableau.stages() != 1) raise(ErrorKind::BadParams, "product measure check needs a 1-stage method");
  const VectorField full = foliate(FoliationSpec{u, v, std::nullopt});
  const DensitySpec mu = DensitySpec::product(rho, nu, u.dim());
  return max_measure_residual(full, tableau, mu, h, samples);
}

// --- Kahan on linear foliations ----------------------------------------------

VectorMap QuadraticMap::to_map() const { return VectorMap::from_quadratic(in_dim(), q, l, d); }

QuadraticFieldSpec assemble_linear_foliation(const QuadraticFieldSpec& u, const QuadraticFieldSpec& v,
                                             const QuadraticMap& w) {
  const Index m = u.dim();
  const Index n = v.dim();
  if (w.in_dim() != m || w.out_dim() != n || static_cast<Index>(w.q.size()) != n) {
    raise(ErrorKind::DimensionMismatch, "w must map the x block to the y block");
  }
  const Index total = m + n;
  std::vector<Matrix> q(static_cast<std::size_t>(total), Matrix::Zero(total, total));
  for (Index i = 0; i < m; ++i) q[static_cast<std::size_t>(i)].topLeftCorner(m, m) = u.q()[static_cast<std::size_t>(i)];
  for (Index i = 0; i < n; ++i) {
    auto& slice = q[static_cast<std::size_t>(m + i)];
    slice.topLeftCorner(m, m) = w.q[static_cast<std::size_t>(i)];
    slice.bottomRightCorner(n, n) = v.q()[static_cast<std::size_t>(i)];
  }
  Matrix l = Matrix::Zero(total, total);
  l.topLeftCorner(m, m) = u.linear();
  l.bottomLeftCorner(n, m) = w.l;
  l.bottomRightCorner(n, n) = v.linear();
  Vector d(total);
  d << u.constant(), v.constant() + w.d;
  return QuadraticFieldSpec(std::move(q), std::move(l), std::move(d));
}

double kahan_foliation_check(const QuadraticFieldSpec& u, const QuadraticFieldSpec& v,
                             const QuadraticMap& w, double h, const std::vector<Vector>& samples) {
  const QuadraticFieldSpec spec = assemble_linear_foliation(u, v, w);
  const VectorField field = spec.to_field("kahan_foliation");
  return max_measure_residual(field, KahanMethod{}, DensitySpec::kahan(field, h, +1), h, samples);
}

double kahan_foliation_check(const QuadraticFieldSpec& u, const QuadraticFieldSpec& v, const VectorMap& w,
                             double h, const std::vector<Vector>& samples, const KahanWeights& weights) {
  const VectorField field =
      foliate(FoliationSpec{u.to_field("u"), CoupledMap::sum_of(w, v.to_field("v")), std::nullopt},
              "kahan_foliation");
  return max_measure_residual(field, KahanRkMethod{weights}, DensitySpec::kahan(field, h, +1), h, samples);
}

// --- Seeded quadratic fields in the determinant class ------------------------

namespace {

/// Quadratic Hamiltonian vector field J∇H on ℝⁿ (n even) with
/// H = ⅙T(x,x,x) + ½xᵀSx + gᵀx.
QuadraticFieldSpec random_hamiltonian(Index n, Rng& rng, double scale) {
  Matrix j = Matrix::Zero(n, n);
  const Index half = n / 2;
  j.topRightCorner(half, half) = Matrix::Identity(half, half);
  j.bottomLeftCorner(half, half) = -Matrix::Identity(half, half);
  j += 0.3 * rng.skew(n);

  // Fully symmetric cubic tensor T via its slices T_a (T_a)_{bc} = T_{abc}.
  std::vector<Matrix> t(static_cast<std::size_t>(n), Matrix::Zero(n, n));
  for (Index a = 0; a < n; ++a) {
    for (Index b = a; b < n; ++b) {
      for (Index c = b; c < n; ++c) {
        const double value = scale * rng.uniform(-1.0, 1.0);
        const Index idx[3] = {a, b, c};
        for (int p = 0; p < 3; ++p) {
          for (int r = 0; r < 3; ++r) {
            if (r == p) continue;
            const int s = 3 - p - r;
            t[static_cast<std::size_t>(idx[p])](idx[r], idx[s]) = value;
          }
        }
      }
    }
  }
  const Matrix s = scale * rng.symmetric(n);
  const Vector g = scale * rng.vector(n);

  // ∇H = ½T(x,x,·) + Sx + g, so f_i = Σ_a J_ia(½ xᵀT_a x) + (JSx)_i + (Jg)_i.
  std::vector<Matrix> q(static_cast<std::size_t>(n), Matrix::Zero(n, n));
  for (Index i = 0; i < n; ++i) {
    for (Index a = 0; a < n; ++a) q[static_cast<std::size_t>(i)] += 0.5 * j(i, a) * t[static_cast<std::size_t>(a)];
  }
  return QuadraticFieldSpec(std::move(q), j * s, j * g);
}

}  // namespace

QuadraticFieldSpec random_quadratic_d_field(Index n, std::uint64_t seed, bool conjugated) {
  if (n < 1 || n > 4) raise(ErrorKind::BadParams, "random quadratic fields support 1 ≤ n ≤ 4");
  Rng rng(seed);
  constexpr double kScale = 0.5;

  std::optional<QuadraticFieldSpec> spec;
  if (n == 1) {
    spec = QuadraticFieldSpec::affine(Matrix::Zero(1, 1), kScale * rng.vector(1));
  } else if (n % 2 == 0) {
    spec = random_hamiltonian(n, rng, kScale);
  } else {
    // (u(x), w(x)) with u Hamiltonian on ℝ²: f′ is block lower triangular
    // with a zero diagonal block, so the spectrum stays paired.
    const QuadraticFieldSpec u = random_hamiltonian(2, rng, kScale);
    QuadraticMap w;
    for (Index i = 0; i < n - 2; ++i) w.q.push_back(kScale * rng.symmetric(2));
    w.l = kScale * rng.matrix(n - 2, 2);
    w.d = kScale * rng.vector(n - 2);
    const QuadraticFieldSpec zero(std::vector<Matrix>(static_cast<std::size_t>(n - 2), Matrix::Zero(n - 2, n - 2)),
                                  Matrix::Zero(n - 2, n - 2), Vector::Zero(n - 2));
    spec = assemble_linear_foliation(u, zero, w);
  }

  if (!conjugated) return *spec;
  const Matrix p = rng.invertible(n);
  const VectorField f = conjugate(spec->to_field(), p);
  return *f.quadratic();
}

std::vector<QuadraticFieldSpec> quadratic_d_suite(std::size_t count, std::uint64_t seed) {
  std::vector<QuadraticFieldSpec> out;
  out.reserve(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const Index n = 2 + static_cast<Index>(i % 3);
    out.push_back(random_quadratic_d_field(n, rng.next(), i % 2 == 1));
  }
  return out;
}

}  // namespace vprk
