#pragma once

#include <cmath>
#include <functional>

#include "vprk/linalg.hpp"

namespace vprk {

using VectorMapFn = std::function<Vector(const Vector&)>;

/// Central-difference Jacobian of `map` at x; column j uses the step
/// 1e-6·(1 + |x_j|).
inline Matrix central_difference_jacobian(const VectorMapFn& map, const Vector& x) {
  const Vector f0 = map(x);
  Matrix jac(f0.size(), x.size());
  Vector probe = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double step = 1e-6 * (1.0 + std::abs(x(j)));
    probe(j) = x(j) + step;
    const Vector plus = map(probe);
    probe(j) = x(j) - step;
    const Vector minus = map(probe);
    probe(j) = x(j);
    jac.col(j) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

}  // namespace vprk
