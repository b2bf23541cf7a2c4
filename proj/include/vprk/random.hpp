#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "vprk/linalg.hpp"

namespace vprk {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// Seeded generator whose real-valued draws are defined bit-for-bit (no
/// dependence on the standard library's distribution implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Vector vector(Index n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

  Matrix matrix(Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    }
    return m;
  }

  /// Identity plus a bounded perturbation; well conditioned by construction.
  Matrix invertible(Index n, double spread = 0.4) {
    return Matrix::Identity(n, n) + matrix(n, n, -spread, spread);
  }

  Matrix skew(Index n) {
    const Matrix m = matrix(n, n);
    return m - m.transpose();
  }

  Matrix symmetric(Index n) {
    const Matrix m = matrix(n, n);
    return 0.5 * (m + m.transpose());
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// `count` points drawn uniformly from [-box, box]^n.
inline std::vector<Vector> sample_points(Index n, std::size_t count, std::uint64_t seed,
                                         double box = 1.0) {
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(rng.vector(n, -box, box));
  return out;
}

}  // namespace vprk
