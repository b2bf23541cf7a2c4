#pragma once

// Dense real linear algebra on Eigen storage: partial-pivoting LU, determinant,
// linear solve and the Kronecker product. Everything is templated on the
// scalar type so that the same kernels serve double and long double checks.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "vprk/error.hpp"

namespace vprk {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

/// Pivots below this fraction of the matrix infinity norm are treated as zero.
inline constexpr double kPivotTolerance = 1e-14;

/// Induced infinity norm (maximum absolute row sum).
template <typename Derived>
typename Derived::RealScalar inf_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Largest absolute entry; the vector infinity norm.
template <typename Derived>
typename Derived::RealScalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
  if (!m.allFinite()) raise(ErrorKind::NonFinite, what + " has non-finite entries");
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
  if (m.rows() != m.cols()) {
    raise(ErrorKind::DimensionMismatch, what + " must be square, got " + std::to_string(m.rows()) +
                                            "x" + std::to_string(m.cols()));
  }
}

/// LU factorisation PA = LU with partial (row) pivoting. L is unit lower
/// triangular and stored below the diagonal of `packed()`.
template <typename Scalar>
class LuDecomposition {
 public:
  template <typename Derived>
  explicit LuDecomposition(const Eigen::MatrixBase<Derived>& m) : lu_(m) {
    require_square(m, "LU input");
    const Index n = lu_.rows();
    perm_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
    const Scalar threshold = Scalar(kPivotTolerance) * inf_norm(lu_);

    for (Index k = 0; k < n; ++k) {
      Index pivot_row = k;
      Scalar pivot_mag = std::abs(lu_(k, k));
      for (Index i = k + 1; i < n; ++i) {
        const Scalar mag = std::abs(lu_(i, k));
        if (mag > pivot_mag) {
          pivot_mag = mag;
          pivot_row = i;
        }
      }
      if (pivot_mag == Scalar(0) || pivot_mag < threshold) {
        singular_ = true;
        continue;
      }
      if (pivot_row != k) {
        lu_.row(k).swap(lu_.row(pivot_row));
        std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(pivot_row)]);
        sign_ = -sign_;
      }
      for (Index i = k + 1; i < n; ++i) {
        const Scalar factor = lu_(i, k) / lu_(k, k);
        lu_(i, k) = factor;
        if (factor != Scalar(0)) {
          lu_.row(i).tail(n - k - 1) -= factor * lu_.row(k).tail(n - k - 1);
        }
      }
    }
  }

  Index size() const { return lu_.rows(); }
  bool singular() const { return singular_; }
  const MatrixX<Scalar>& packed() const { return lu_; }

  /// Zero when a pivot fell below tolerance.
  Scalar determinant() const {
    if (singular_) return Scalar(0);
    Scalar d = Scalar(sign_);
    for (Index i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
    return d;
  }

  template <typename Derived>
  MatrixX<Scalar> solve(const Eigen::MatrixBase<Derived>& rhs) const {
    const Index n = lu_.rows();
    if (rhs.rows() != n) {
      raise(ErrorKind::DimensionMismatch, "rhs has " + std::to_string(rhs.rows()) +
                                              " rows, matrix has " + std::to_string(n));
    }
    if (singular_) raise(ErrorKind::SingularMatrix, "pivot below tolerance");
    MatrixX<Scalar> x(n, rhs.cols());
    for (Index i = 0; i < n; ++i) x.row(i) = rhs.row(perm_[static_cast<std::size_t>(i)]);
    for (Index i = 1; i < n; ++i) {
      x.row(i) -= lu_.row(i).head(i) * x.topRows(i);
    }
    for (Index i = n - 1; i >= 0; --i) {
      if (i + 1 < n) x.row(i) -= lu_.row(i).tail(n - i - 1) * x.bottomRows(n - i - 1);
      x.row(i) /= lu_(i, i);
    }
    return x;
  }

 private:
  MatrixX<Scalar> lu_;
  std::vector<Index> perm_;
  int sign_ = 1;
  bool singular_ = false;
};

template <typename Derived>
LuDecomposition(const Eigen::MatrixBase<Derived>&) -> LuDecomposition<typename Derived::Scalar>;

/// Solves M X = rhs. Throws SingularMatrix when a pivot is below tolerance.
template <typename DerivedM, typename DerivedR>
MatrixX<typename DerivedM::Scalar> lu_solve(const Eigen::MatrixBase<DerivedM>& m,
                                            const Eigen::MatrixBase<DerivedR>& rhs) {
  return LuDecomposition<typename DerivedM::Scalar>(m).solve(rhs);
}

template <typename Derived>
typename Derived::Scalar det(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0 && m.cols() == 0) return typename Derived::Scalar(1);
  return LuDecomposition<typename Derived::Scalar>(m).determinant();
}

/// Block (i,j) of the result is a(i,j) * b.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                        const Eigen::MatrixBase<DerivedB>& b) {
  const Index r = b.rows();
  const Index s = b.cols();
  MatrixX<typename DerivedA::Scalar> out(a.rows() * r, a.cols() * s);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) out.block(i * r, j * s, r, s) = a(i, j) * b;
  }
  return out;
}

/// Block-diagonal matrix with the given square blocks.
template <typename Scalar>
MatrixX<Scalar> block_diagonal(const std::vector<MatrixX<Scalar>>& blocks) {
  Index total = 0;
  for (const auto& b : blocks) total += b.rows();
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(total, total);
  Index offset = 0;
  for (const auto& b : blocks) {
    out.block(offset, offset, b.rows(), b.cols()) = b;
    offset += b.rows();
  }
  return out;
}

}  // namespace vprk
