#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vprk/field.hpp"
#include "vprk/tableau.hpp"

namespace vprk {

/// Converged stage values of one RK step and F = diag(f′(k₁), …, f′(k_s)).
struct StageLinearization {
  std::vector<Vector> stages;
  Matrix f_blocks;
  double h = 0.0;
  bool converged = false;
  int newton_iters = 0;
  double residual = 0.0;
};

struct StepResult {
  Vector x_next;
  /// Absent for the direct Kahan solve, which has no stages.
  std::optional<StageLinearization> stage_lin;
};

struct NewtonOptions {
  int max_iters = 50;
  /// Converged when ‖residual‖∞ ≤ tolerance·(1 + ‖x‖∞).
  double tolerance = 1e-13;
};

/// One step of the implicit RK method; stages by Newton iteration on the
/// sn-dimensional stage system starting from k_i = x.
/// Throws NewtonDivergence or SingularNewtonMatrix.
StepResult rk_step(const VectorField& field, const ButcherTableau& tableau, double h,
                   const Vector& x, const NewtonOptions& options = {});

/// Kahan's method: (x′ − x)/h = q(x, x′) + ½L(x + x′) + d, solved as the
/// linear system (I − (h/2)f′(x))·x′ = x + (h/2)Lx + h·d.
/// Throws SingularKahanMatrix.
StepResult kahan_step(const QuadraticFieldSpec& spec, double h, const Vector& x);

/// Weights (b, c) with Σb = 1, Σbc = ½, Σbc² = 0.
struct KahanWeights {
  Vector b;
  Vector c;

  /// Moment residuals (Σb − 1, Σbc − ½, Σbc²).
  Eigen::Vector3d moments() const;
  /// Throws BadParams when any moment residual exceeds 1e-12.
  void validate() const;
};

/// s = 3 gives b = (−½, 2, −½), c = (0, ½, 1). For s > 3 the abscissae are
/// extended by −1, −2, … and b is the minimum-norm solution of the moments.
KahanWeights kahan_weights(Index s = 3);

/// The equivalent RK tableau A = c·bᵀ.
ButcherTableau kahan_tableau(const KahanWeights& weights);

/// x′ = x + h Σ b_i f(x + c_i(x′ − x)), Newton on x′. Valid for any field; for
/// quadratic fields it reproduces kahan_step. Stage data refer to kahan_tableau.
StepResult kahan_rk_step(const VectorField& field, const KahanWeights& weights, double h,
                         const Vector& x, const NewtonOptions& options = {});
StepResult kahan_rk_step(const QuadraticFieldSpec& spec, const KahanWeights& weights, double h,
                         const Vector& x, const NewtonOptions& options = {});

// --- Methods and trajectories ------------------------------------------------

struct KahanMethod {};
struct KahanRkMethod {
  KahanWeights weights;
};
/// RK maps applied in order: `tableaux[0]` first.
struct Composition {
  std::vector<ButcherTableau> tableaux;
};

using Method = std::variant<ButcherTableau, Composition, KahanMethod, KahanRkMethod>;

/// midpoint | trapezoidal | gauss2 | gauss3 | kahan | kahan_rk, or a
/// composition "a*b" (also "a∘b") meaning a∘b, i.e. b is applied first.
Method method_from_name(const std::string& name);
std::string method_name(const Method& method);

/// One application of a method; composite methods record each sub-step.
struct MethodStep {
  double h = 0.0;
  Vector x;
  Vector x_next;
  std::vector<StepResult> parts;
};

MethodStep step(const VectorField& field, const Method& method, double h, const Vector& x);

struct StepFailure {
  std::size_t step_index = 0;
  ErrorKind kind = ErrorKind::NewtonDivergence;
  std::string message;
};

struct Trajectory {
  std::vector<MethodStep> steps;
  std::optional<StepFailure> failure;

  bool ok() const { return !failure.has_value(); }
};

/// Iterates the method n_steps times; stops at the first failing step and
/// returns the partial trajectory with the failure recorded.
Trajectory trajectory(const VectorField& field, const Method& method, double h, const Vector& x0,
                      std::size_t n_steps);

}  // namespace vprk
