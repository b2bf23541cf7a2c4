#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "vprk/classify.hpp"
#include "vprk/random.hpp"

using vprk::Matrix;
using vprk::Vector;

namespace {

vprk::VectorField linear_field(const Matrix& l) {
  return vprk::QuadraticFieldSpec::affine(l, Vector::Zero(l.rows())).to_field("linear");
}

// det(I − zJ) at a point, expanded by cofactors.
double char_value(const Matrix& jac, double z) {
  return oracle::cofactor_det(Matrix(Matrix::Identity(jac.rows(), jac.cols()) - z * jac));
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("three characterisations agree on random linear fields") {
    vprk::Rng rng(61);
    int paired_count = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 2 + trial % 3;
      const bool paired = trial % 2 == 0;
      const Matrix l = paired ? vprk::random_paired_matrix(n, rng) : vprk::random_generic_matrix(n, rng);
      CAPTURE(trial);
      const auto report = vprk::classify(linear_field(l), vprk::default_classify_config(n, 62, 3));
      CHECK(report.equivalence_consistent);
      CHECK(report.det_condition.pass == paired);
      CHECK(report.odd_traces.pass == paired);
      CHECK(report.eig_pairing_pass == paired);
      if (paired) ++paired_count;
    }
    CHECK(paired_count == 25);
  }

  TEST_CASE("determinant condition for a paired spectrum, by hand") {
    // Eigenvalues ±2 and 0: det(I ± (h/2)L) = 1 − h² for every h.
    Matrix l = Matrix::Zero(3, 3);
    l(0, 0) = 2.0;
    l(1, 1) = -2.0;
    for (double h : {0.1, 0.5, 1.0}) {
      CHECK(oracle::cofactor_det(Matrix(Matrix::Identity(3, 3) + 0.5 * h * l)) == doctest::Approx(1.0 - h * h));
      CHECK(vprk::det_condition_deviation(l, h) <= 1e-15);
    }
    CHECK(vprk::odd_trace_check(l, 3).pass);
    CHECK(vprk::eig_pairing_check(l).pass);

    l(2, 2) = 1.0;
    CHECK(!vprk::odd_trace_check(l, 3).pass);
    const auto pairing = vprk::eig_pairing_check(l);
    CHECK(!pairing.pass);
    REQUIRE(pairing.unpaired.size() == 1);
    CHECK(pairing.unpaired.front().real() == doctest::Approx(1.0));
  }

  TEST_CASE("repeated eigenvalues respect multiplicity") {
    // Spectrum {1, 1, −1}: only one of the two 1's has a partner.
    Matrix l = Matrix::Zero(3, 3);
    l(0, 0) = 1.0;
    l(1, 1) = 1.0;
    l(2, 2) = -1.0;
    CHECK(!vprk::eig_pairing_check(l).pass);
    // Spectrum {1, 1, −1, −1}.
    Matrix m = Matrix::Zero(4, 4);
    m.diagonal() << 1.0, 1.0, -1.0, -1.0;
    CHECK(vprk::eig_pairing_check(m).pass);
  }

  TEST_CASE("characteristic polynomial parity") {
    vprk::Rng rng(63);
    for (int n = 2; n <= 4; ++n) {
      const Matrix paired = vprk::random_paired_matrix(n, rng);
      const Vector q = vprk::char_poly_by_interpolation(paired);
      for (vprk::Index k = 1; k <= n; k += 2) CHECK(std::abs(q(k)) <= 1e-9);
      // Interpolated values reproduce the cofactor oracle.
      for (double z : {-0.7, 0.3, 1.1}) {
        double poly = 0.0;
        for (vprk::Index k = n; k >= 0; --k) poly = poly * z + q(k);
        CHECK(poly == doctest::Approx(char_value(paired, z)).epsilon(1e-10).scale(1.0));
      }
      const Matrix generic = vprk::random_generic_matrix(n, rng);
      CHECK(std::abs(vprk::char_poly_by_interpolation(generic)(1)) > 1e-3);
    }
  }

  TEST_CASE("Newton identities give the characteristic coefficients") {
    vprk::Rng rng(64);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 1 + trial % 5;
      const Matrix m = rng.matrix(n, n);
      const Vector e = vprk::elementary_from_traces(m);
      const Vector q = vprk::char_poly_by_interpolation(m);
      CHECK(e(0) == 1.0);
      // det(I − zJ) = Σ (−1)ᵏ e_k zᵏ.
      for (vprk::Index k = 0; k <= n; ++k) {
        const double sign = k % 2 == 0 ? 1.0 : -1.0;
        CHECK(sign * e(k) == doctest::Approx(q(k)).epsilon(1e-9).scale(1.0));
      }
      CHECK(e(1) == doctest::Approx(m.trace()).epsilon(1e-12).scale(1.0));
      CHECK(e(n) == doctest::Approx(oracle::cofactor_det(m)).epsilon(1e-9).scale(1.0));
    }
  }

  TEST_CASE("similarity witnesses") {
    Matrix jt = Matrix::Zero(4, 4);
    jt.topRightCorner(2, 2) = -Matrix::Identity(2, 2);
    jt.bottomLeftCorner(2, 2).setIdentity();
    const Vector diag = (Vector(4) << 1, 1, -1, -1).finished();
    const Matrix ps = diag.asDiagonal();

    const auto h = vprk::builtin_field("quad_hamiltonian");
    auto config = vprk::default_classify_config(4, 65, 10);
    config.p_h = jt;
    config.p_s = ps;
    const auto rh = vprk::classify(h, config);
    REQUIRE(rh.similarity_h.has_value());
    CHECK(rh.similarity_h->pass);
    CHECK(rh.det_condition.pass);
    CHECK(rh.equivalence_consistent);

    const auto rs = vprk::classify(vprk::builtin_field("hlw_separable"), config);
    REQUIRE(rs.similarity_s.has_value());
    CHECK(rs.similarity_s->pass);
    CHECK(rs.det_condition.pass);
    CHECK(rs.divergence <= 1e-12);

    CHECK(oracle::thrown_kind([&] {
            vprk::similarity_check(h, Matrix::Zero(4, 4), vprk::SimilarityMode::H, config.samples);
          }) == vprk::ErrorKind::SingularP);
    CHECK(oracle::thrown_kind([&] {
            vprk::similarity_check(h, Matrix::Identity(3, 3), vprk::SimilarityMode::S, config.samples);
          }) == vprk::ErrorKind::DimensionMismatch);
  }

  TEST_CASE("members and non-members") {
    // example1 has a bipartite Jacobian, so its spectrum is paired.
    const auto member = vprk::classify(vprk::builtin_field("example1"), vprk::default_classify_config(3, 66, 20));
    CHECK(member.equivalence_consistent);
    CHECK(member.det_condition.pass);
    CHECK(member.odd_traces.pass);
    CHECK(member.eig_pairing_pass);

    // Divergence-free, yet tr(L³) = 1 + 1 − 8 ≠ 0 for L = diag(1, 1, −2).
    Matrix l = Matrix::Zero(3, 3);
    l.diagonal() << 1.0, 1.0, -2.0;
    const auto report = vprk::classify(linear_field(l), vprk::default_classify_config(3, 66, 5));
    CHECK(report.equivalence_consistent);
    CHECK(report.divergence <= 1e-12);
    CHECK(!report.det_condition.pass);
    CHECK(!report.odd_traces.pass);
    CHECK(report.odd_traces.max_abs_trace.at(1) == doctest::Approx(6.0));
    const auto j = vprk::to_json(report);
    CHECK(j.at("field") == "linear");
    CHECK(j.at("det_condition").at("pass") == false);
  }

  TEST_CASE("input validation") {
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 1) = std::nan("");
    CHECK(oracle::thrown_kind([&] { vprk::eig_pairing_check(bad); }) == vprk::ErrorKind::NonFinite);
    vprk::ClassifyConfig empty;
    CHECK(oracle::thrown_kind([&] { vprk::classify(vprk::builtin_field("linear"), empty); }) ==
          vprk::ErrorKind::BadParams);
    vprk::Rng rng(67);
    CHECK(oracle::thrown_kind([&] { vprk::random_paired_matrix(5, rng); }) == vprk::ErrorKind::BadParams);
    CHECK(vprk::eig_pairing_check(Matrix(0, 0)).pass);
  }
}
