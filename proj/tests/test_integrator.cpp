#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vprk/integrator.hpp"
#include "vprk/random.hpp"

using vprk::Matrix;
using vprk::Vector;

namespace {

vprk::VectorField scalar_linear(double lambda) {
  return vprk::QuadraticFieldSpec::affine(Matrix::Constant(1, 1, lambda), Vector::Zero(1)).to_field("scalar");
}

double global_error(const vprk::VectorField& f, const vprk::Method& m, double h, const Vector& x0,
                    const std::function<Vector(double)>& exact) {
  const auto n = static_cast<std::size_t>(std::lround(1.0 / h));
  const auto traj = vprk::trajectory(f, m, h, x0, n);
  REQUIRE(traj.ok());
  return vprk::max_abs(Vector(traj.steps.back().x_next - exact(1.0)));
}

}  // namespace

TEST_SUITE("integrator") {
  TEST_CASE("midpoint on a scalar linear equation") {
    // Stability function (1 + z/2)/(1 − z/2).
    const auto f = scalar_linear(1.0);
    const auto r = vprk::rk_step(f, vprk::builtin_tableau("midpoint"), 0.1, Vector::Ones(1));
    CHECK(r.x_next(0) == doctest::Approx(1.05 / 0.95).epsilon(1e-15));
    REQUIRE(r.stage_lin.has_value());
    CHECK(r.stage_lin->converged);
  }

  TEST_CASE("Newton stages agree with fixed-point stages") {
    vprk::Rng rng(41);
    for (const char* name : {"midpoint", "trapezoidal", "gauss2", "gauss3"}) {
      const auto t = vprk::builtin_tableau(name);
      for (const auto& field_name : {"quad_hamiltonian", "example1", "example3", "hlw_separable"}) {
        CAPTURE(name);
        CAPTURE(field_name);
        const auto f = vprk::builtin_field(field_name);
        const Vector x = rng.vector(f.dim(), -0.5, 0.5);
        const double h = 0.05;
        const Vector expected = oracle::fixed_point_rk([&](const Vector& p) { return f.eval(p); }, t.a(), t.b(), h, x);
        CHECK(vprk::max_abs(Vector(vprk::rk_step(f, t, h, x).x_next - expected)) <= 1e-13);
      }
    }
  }

  TEST_CASE("harmonic oscillator: symplectic methods conserve the quadratic invariant") {
    const auto f = vprk::builtin_field("linear");
    Vector x(2);
    x << 1.0, 0.0;
    for (const char* name : {"midpoint", "gauss2", "gauss3"}) {
      const auto traj = vprk::trajectory(f, vprk::builtin_tableau(name), 0.3, x, 50);
      REQUIRE(traj.ok());
      CHECK(traj.steps.back().x_next.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("convergence orders") {
    const auto f = vprk::builtin_field("linear");
    Vector x0(2);
    x0 << 1.0, 0.0;
    auto exact = [](double t) { return Vector((Vector(2) << std::cos(t), -std::sin(t)).finished()); };
    auto ratio = [&](const vprk::Method& m) {
      return global_error(f, m, 0.1, x0, exact) / global_error(f, m, 0.05, x0, exact);
    };
    CHECK(ratio(vprk::builtin_tableau("midpoint")) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(ratio(vprk::builtin_tableau("trapezoidal")) == doctest::Approx(4.0).epsilon(0.05));
    CHECK(ratio(vprk::builtin_tableau("gauss2")) == doctest::Approx(16.0).epsilon(0.05));
    CHECK(ratio(vprk::KahanMethod{}) == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("Kahan step satisfies its defining relation") {
    const auto f = vprk::builtin_field("quad_hamiltonian");
    const auto& spec = *f.quadratic();
    for (const auto& x : vprk::sample_points(4, 10, 42)) {
      const double h = 0.2;
      const Vector y = vprk::kahan_step(spec, h, x).x_next;
      const Vector rhs = spec.bilinear(x, y) + 0.5 * spec.linear() * (x + y) + spec.constant();
      CHECK(vprk::max_abs(Vector((y - x) / h - rhs)) <= 1e-12);
    }
  }

  TEST_CASE("Kahan on a genuinely quadratic field agrees with its RK form") {
    vprk::Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 2 + trial % 3;
      std::vector<Matrix> q;
      for (int i = 0; i < n; ++i) q.push_back(0.3 * rng.symmetric(n));
      const vprk::QuadraticFieldSpec spec(q, 0.3 * rng.matrix(n, n), 0.3 * rng.vector(n));
      const Vector x = rng.vector(n);
      const Vector direct = vprk::kahan_step(spec, 0.2, x).x_next;
      const Vector via_rk = vprk::kahan_rk_step(spec, vprk::kahan_weights(3), 0.2, x).x_next;
      const Vector via_tableau = vprk::rk_step(spec.to_field(), vprk::kahan_tableau(vprk::kahan_weights(3)), 0.2, x).x_next;
      CHECK(vprk::max_abs(Vector(direct - via_rk)) <= 1e-12);
      CHECK(vprk::max_abs(Vector(direct - via_tableau)) <= 1e-12);
      for (int s = 4; s <= 5; ++s) {
        CHECK(vprk::max_abs(Vector(direct - vprk::kahan_rk_step(spec, vprk::kahan_weights(s), 0.2, x).x_next)) <=
              1e-12);
      }
    }
  }

  TEST_CASE("Kahan weights") {
    const auto w = vprk::kahan_weights(3);
    CHECK(w.b(0) == -0.5);
    CHECK(w.b(1) == 2.0);
    CHECK(w.c(2) == 1.0);
    for (int s = 3; s <= 7; ++s) CHECK(vprk::kahan_weights(s).moments().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(oracle::thrown_kind([] { vprk::kahan_weights(2); }) == vprk::ErrorKind::BadParams);
    vprk::KahanWeights bad{Vector::Constant(3, 1.0 / 3.0), Vector::Zero(3)};
    CHECK(oracle::thrown_kind([&] { bad.validate(); }) == vprk::ErrorKind::BadParams);
  }

  TEST_CASE("equivariance under linear changes of variables") {
    vprk::Rng rng(44);
    const auto f = vprk::builtin_field("example1");
    const Matrix p = rng.invertible(3);
    const auto g = vprk::conjugate(f, p);
    const auto t = vprk::builtin_tableau("gauss2");
    for (const auto& x : vprk::sample_points(3, 5, 45)) {
      const Vector lhs = vprk::rk_step(g, t, 0.2, Vector(p * x)).x_next;
      const Vector rhs = p * vprk::rk_step(f, t, 0.2, x).x_next;
      CHECK(vprk::max_abs(Vector(lhs - rhs)) <= 1e-12);
    }
  }

  TEST_CASE("symmetric methods are self-adjoint") {
    const auto f = vprk::builtin_field("example1");
    for (const char* name : {"midpoint", "gauss2", "gauss3"}) {
      const auto t = vprk::builtin_tableau(name);
      for (const auto& x : vprk::sample_points(3, 3, 46)) {
        const Vector y = vprk::rk_step(f, t, 0.3, x).x_next;
        CHECK(vprk::max_abs(Vector(vprk::rk_step(f, t, -0.3, y).x_next - x)) <= 1e-12);
      }
    }
  }

  TEST_CASE("method names and compositions") {
    const auto m = vprk::method_from_name("gauss2*midpoint");
    REQUIRE(std::holds_alternative<vprk::Composition>(m));
    const auto& comp = std::get<vprk::Composition>(m);
    CHECK(comp.tableaux.front().name() == "midpoint");  // applied first
    CHECK(vprk::method_name(m) == "gauss2*midpoint");
    CHECK(vprk::method_name(vprk::method_from_name("gauss2∘midpoint")) == "gauss2*midpoint");

    const auto f = vprk::builtin_field("example1");
    Vector x(3);
    x << 0.1, 0.2, 0.3;
    const Vector half = vprk::rk_step(f, vprk::builtin_tableau("midpoint"), 0.2, x).x_next;
    const Vector full = vprk::rk_step(f, vprk::builtin_tableau("gauss2"), 0.2, half).x_next;
    CHECK(vprk::max_abs(Vector(vprk::step(f, m, 0.2, x).x_next - full)) == 0.0);

    CHECK(oracle::thrown_kind([] { vprk::method_from_name("euler"); }) == vprk::ErrorKind::UnknownMethod);
    CHECK(oracle::thrown_kind([] { vprk::method_from_name("kahan*midpoint"); }) == vprk::ErrorKind::UnknownMethod);
    CHECK(oracle::thrown_kind([&] { vprk::step(f, vprk::KahanMethod{}, 0.1, x); }) == vprk::ErrorKind::BadParams);
  }

  TEST_CASE("failures") {
    const auto f = vprk::builtin_field("example1");
    const auto t = vprk::builtin_tableau("gauss2");
    CHECK(oracle::thrown_kind([&] { vprk::rk_step(f, t, 0.1, Vector::Zero(2)); }) ==
          vprk::ErrorKind::DimensionMismatch);
    CHECK(oracle::thrown_kind([&] { vprk::rk_step(f, t, 0.0, Vector::Zero(3)); }) == vprk::ErrorKind::BadParams);
    CHECK(oracle::thrown_kind([&] { vprk::trajectory(f, t, 0.1, Vector::Zero(3), 0); }) ==
          vprk::ErrorKind::BadParams);

    // Finite-time blow-up of ẋ = x²: the trajectory records the failing step.
    const auto blow = vprk::VectorField(
        "blowup", 1, [](const Vector& x) { return Vector(x.array().square()); },
        [](const Vector& x) { return Matrix::Constant(1, 1, 2.0 * x(0)); });
    const auto traj = vprk::trajectory(blow, vprk::builtin_tableau("midpoint"), 0.5, Vector::Ones(1), 10);
    CHECK(!traj.ok());
    REQUIRE(traj.failure.has_value());
    CHECK(traj.steps.size() == traj.failure->step_index);

    // I − (h/2)f′(x) singular for Kahan on ẋ = Lx with L = 2I, h = 1.
    const auto spec = vprk::QuadraticFieldSpec::affine(2.0 * Matrix::Identity(2, 2), Vector::Zero(2));
    CHECK(oracle::thrown_kind([&] { vprk::kahan_step(spec, 1.0, Vector::Ones(2)); }) ==
          vprk::ErrorKind::SingularKahanMatrix);
  }
}
