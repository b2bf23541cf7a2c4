#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <functional>
#include <optional>

#include <Eigen/Dense>

#include "vprk/error.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Laplace expansion along the first row.
inline double cofactor_det(const Matrix& m) {
  const auto n = m.rows();
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    total += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * cofactor_det(minor);
  }
  return total;
}

/// Fourth-order central differences (Richardson of two step sizes).
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double step = 1e-4) {
  const Vector f0 = f(x);
  Matrix out(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    auto diff = [&](double e) {
      Vector xp = x;
      Vector xm = x;
      xp(j) += e;
      xm(j) -= e;
      return Vector((f(xp) - f(xm)) / (2.0 * e));
    };
    out.col(j) = (4.0 * diff(step / 2.0) - diff(step)) / 3.0;
  }
  return out;
}

/// Runge-Kutta step with stages by plain fixed-point iteration; valid when
/// h·Lip(f)·‖A‖ < 1.
inline Vector fixed_point_rk(const std::function<Vector(const Vector&)>& f, const Matrix& a, const Vector& b, double h,
                             const Vector& x, int iters = 400) {
  const auto s = b.size();
  std::vector<Vector> k(static_cast<std::size_t>(s), x);
  for (int it = 0; it < iters; ++it) {
    std::vector<Vector> fk;
    for (const auto& ki : k) fk.push_back(f(ki));
    for (Eigen::Index i = 0; i < s; ++i) {
      Vector next = x;
      for (Eigen::Index j = 0; j < s; ++j) next += h * a(i, j) * fk[static_cast<std::size_t>(j)];
      k[static_cast<std::size_t>(i)] = next;
    }
  }
  Vector out = x;
  for (Eigen::Index i = 0; i < s; ++i) out += h * b(i) * f(k[static_cast<std::size_t>(i)]);
  return out;
}

/// Kind of the vprk::Error thrown by `body`, if any.
template <typename F>
std::optional<vprk::ErrorKind> thrown_kind(F&& body) {
  try {
    body();
  } catch (const vprk::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace oracle
