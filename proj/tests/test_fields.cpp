#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vprk/field.hpp"
#include "vprk/random.hpp"

using vprk::Matrix;
using vprk::Vector;

namespace {

double jacobian_gap(const vprk::VectorField& f, const Vector& x) {
  const Matrix fd = oracle::fd_jacobian([&](const Vector& p) { return f.eval(p); }, x);
  return vprk::max_abs(Matrix(f.jacobian(x) - fd)) / (1.0 + vprk::max_abs(fd));
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("analytic Jacobians match finite differences") {
    for (const auto& name : vprk::builtin_field_names()) {
      CAPTURE(name);
      const auto f = vprk::builtin_field(name);
      for (const auto& x : vprk::sample_points(f.dim(), 20, 31)) {
        if (name == "example2" && std::abs(x(0)) < 1e-3) continue;
        CHECK(jacobian_gap(f, x) <= 1e-8);
      }
    }
  }

  TEST_CASE("example2 seam and values") {
    const auto f = vprk::builtin_field("example2");
    CHECK(f.smoothness() == vprk::Smoothness::C1);
    Vector x(3);
    x << 0.5, 0.0, 0.0;
    const Vector v = f.eval(x);
    CHECK(v(0) == doctest::Approx(-23.0 / 24.0));
    CHECK(v(1) == 0.0);
    CHECK(v(2) == 0.0);
    // At x = 0 both branches have vanishing x-dependent entries; the Jacobian is continuous.
    Vector seam(3);
    seam << 0.0, 0.7, -0.4;
    CHECK(vprk::max_abs(f.jacobian(seam)) == 0.0);
    Vector left = seam;
    left(0) = -1e-7;
    CHECK(vprk::max_abs(f.jacobian(left)) <= 1e-6);

    const auto g = vprk::builtin_field("example2", {{"c", 2.0}});
    CHECK(g.eval(x)(0) == doctest::Approx(1.0 / 24.0 - 2.0));
  }

  TEST_CASE("example3 Jacobian has the A(x)S(y) block") {
    const auto f = vprk::builtin_field("example3");
    Vector z(5);
    z << 1.0, 0.5, 1.0 / 3.0, 0.25, 0.2;
    const Matrix jac = f.jacobian(z);
    Matrix a(3, 3);
    a << 0, 1, 1, -1, 0, 0.5, -1, -0.5, 0;
    const Vector s = (Vector(3) << 1.0 / 9.0, 1.0 / 16.0, 0.2).finished();
    CHECK(vprk::max_abs(Matrix(jac.bottomRightCorner(3, 3) - a * s.asDiagonal())) <= 1e-15);
    CHECK(vprk::max_abs(jac.topRightCorner(2, 3)) == 0.0);
  }

  TEST_CASE("quadratic spec identities") {
    vprk::Rng rng(32);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 1 + trial % 4;
      std::vector<Matrix> q;
      for (int i = 0; i < n; ++i) q.push_back(rng.matrix(n, n));  // deliberately not symmetric
      const vprk::QuadraticFieldSpec spec(q, rng.matrix(n, n), rng.vector(n));
      const Vector x = rng.vector(n);
      const Vector y = rng.vector(n);
      CHECK(vprk::max_abs(Vector(spec.bilinear(x, y) - vprk::polarize(spec, x, y))) <= 1e-14);
      CHECK(vprk::max_abs(Vector(spec.bilinear(x, y) - spec.bilinear(y, x))) <= 1e-14);
      CHECK(vprk::max_abs(Vector(spec.bilinear_matrix(x) * y - spec.bilinear(x, y))) <= 1e-14);
      Vector direct(n);
      for (int i = 0; i < n; ++i) direct(i) = x.dot(q[static_cast<std::size_t>(i)] * x);
      CHECK(vprk::max_abs(Vector(spec.homogeneous(x) - direct)) <= 1e-14);
      CHECK(jacobian_gap(spec.to_field(), x) <= 1e-9);
    }
  }

  TEST_CASE("similarity structure of builtins") {
    // 𝓗: with P = Jᵀ, P f′ P⁻¹ = −f′ᵀ.
    const auto h = vprk::builtin_field("quad_hamiltonian");
    Matrix j = Matrix::Zero(4, 4);
    j.topRightCorner(2, 2).setIdentity();
    j.bottomLeftCorner(2, 2) = -Matrix::Identity(2, 2);
    const Matrix p = j.transpose();
    for (const auto& x : vprk::sample_points(4, 5, 33)) {
      const Matrix jac = h.jacobian(x);
      CHECK(vprk::max_abs(Matrix(p * jac * p.inverse() + jac.transpose())) <= 1e-14);
    }
    // 𝓢: P = diag(I, −I) anticommutes with the off-diagonal Jacobian.
    const auto s = vprk::builtin_field("hlw_separable");
    const Matrix ps = Vector((Vector(4) << 1, 1, -1, -1).finished()).asDiagonal();
    for (const auto& x : vprk::sample_points(4, 5, 34)) {
      const Matrix jac = s.jacobian(x);
      CHECK(vprk::max_abs(Matrix(ps * jac * ps + jac)) <= 1e-14);
    }
  }

  TEST_CASE("conjugation") {
    vprk::Rng rng(35);
    const auto f = vprk::builtin_field("example1");
    const Matrix p = rng.invertible(3);
    const auto g = vprk::conjugate(f, p);
    for (const auto& z : vprk::sample_points(3, 5, 36)) {
      const Vector expected = p * f.eval(p.inverse() * z);
      CHECK(vprk::max_abs(Vector(g.eval(z) - expected)) <= 1e-13);
      CHECK(jacobian_gap(g, z) <= 1e-8);
    }
    CHECK(oracle::thrown_kind([&] { vprk::conjugate(f, Matrix::Zero(3, 3)); }) == vprk::ErrorKind::SingularP);

    // Quadratic descriptions survive conjugation.
    const auto q = vprk::builtin_field("quad_hamiltonian");
    const Matrix p4 = rng.invertible(4);
    const auto qc = vprk::conjugate(q, p4);
    REQUIRE(qc.quadratic() != nullptr);
    for (const auto& z : vprk::sample_points(4, 5, 37)) {
      CHECK(vprk::max_abs(Vector(qc.quadratic()->eval(z) - qc.eval(z))) <= 1e-13);
    }
  }

  TEST_CASE("foliated fields") {
    for (const char* name : {"example3", "kahan_remark", "sum_demo"}) {
      CAPTURE(name);
      const auto spec = vprk::builtin_foliation(name);
      const auto f = vprk::foliate(spec);
      const vprk::Index m = spec.u.dim();
      for (const auto& z : vprk::sample_points(f.dim(), 10, 38)) {
        CHECK(jacobian_gap(f, z) <= 1e-8);
        CHECK(vprk::max_abs(f.jacobian(z).topRightCorner(m, f.dim() - m)) == 0.0);
      }
    }
    CHECK(vprk::builtin_foliation("sum_demo").v.sum.has_value());
  }

  TEST_CASE("field descriptors") {
    CHECK(vprk::field_from_json("example1").dim() == 3);
    const auto lin = vprk::field_from_json({{"name", "linear"}, {"params", {{"L", {{0, 2}, {-2, 0}}}}}});
    CHECK(lin.jacobian(Vector::Zero(2))(0, 1) == 2.0);
    CHECK(oracle::thrown_kind([] { vprk::builtin_field("lorenz"); }) == vprk::ErrorKind::UnknownField);
    CHECK(oracle::thrown_kind([] {
            vprk::builtin_field("quad_hamiltonian", {{"S", {{1, 2, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}}});
          }) == vprk::ErrorKind::BadParams);
    const auto f = vprk::builtin_field("example1");
    CHECK(oracle::thrown_kind([&] { f.eval(Vector::Zero(2)); }) == vprk::ErrorKind::DimensionMismatch);
  }

  TEST_CASE("user fields without a Jacobian") {
    const auto f = vprk::VectorField::with_fd_jacobian("user", 2, [](const Vector& x) {
      return Vector((Vector(2) << std::sin(x(1)), x(0) * x(0)).finished());
    });
    CHECK(!f.analytic_jacobian());
    Vector x(2);
    x << 0.3, 0.4;
    CHECK(f.jacobian(x)(0, 1) == doctest::Approx(std::cos(0.4)).epsilon(1e-8));
    CHECK(f.jacobian(x)(1, 0) == doctest::Approx(0.6).epsilon(1e-8));
  }
}
