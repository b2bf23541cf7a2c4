#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "vprk/field.hpp"

namespace vprk {

// Every check below certifies "no violation on these samples"; none of them
// proves membership for all x.

struct DetConditionResult {
  bool pass = false;
  double max_deviation = 0.0;
  /// Worst deviation over the h grid, per sample.
  std::vector<double> per_sample;
};

/// Compares det(I + (h/2)f′(x)) with det(I − (h/2)f′(x)). The deviation is
/// |d₊ − d₋| / max(1, |d₊|, |d₋|); pass iff every deviation ≤ 1e-9.
DetConditionResult det_condition_check(const VectorField& field, const std::vector<Vector>& samples,
                                       const std::vector<double>& h_grid);
double det_condition_deviation(const Matrix& jac, double h);

struct OddTraceResult {
  bool pass = false;
  /// max over samples of |tr(f′^{2k+1})|, indexed by k.
  std::vector<double> max_abs_trace;
  std::vector<bool> per_sample;
};

/// tr(f′(x)^{2k+1}) for k = 0..k_max; pass iff each is ≤ 1e-9·(1 + ‖f′‖∞^{2k+1}).
/// k = 0 is the divergence.
OddTraceResult odd_trace_check(const VectorField& field, const std::vector<Vector>& samples, int k_max);
OddTraceResult odd_trace_check(const Matrix& jac, int k_max);

struct EigPairingResult {
  bool pass = false;
  std::vector<std::complex<double>> eigenvalues;
  std::vector<std::complex<double>> unpaired;
};

/// Nonzero eigenvalues (|λ| > 1e-9) must pair with some −λ within
/// 1e-7·(1 + |λ|), respecting multiplicity. Throws EigenFailure.
EigPairingResult eig_pairing_check(const Matrix& jac);

enum class SimilarityMode { H, S };

struct SimilarityResult {
  bool pass = false;
  double defect = 0.0;
};

/// max over samples of ‖P f′ P⁻¹ + f′ᵀ‖∞ (mode H) or ‖P f′ P⁻¹ + f′‖∞ (mode S);
/// pass iff ≤ 1e-9·(1 + ‖f′‖∞) at every sample. Throws SingularP.
SimilarityResult similarity_check(const VectorField& field, const Matrix& p, SimilarityMode mode,
                                  const std::vector<Vector>& samples);
double similarity_defect(const Matrix& jac, const Matrix& p, SimilarityMode mode);

/// Coefficients of q(z) = det(I − zJ), lowest degree first, from n + 1
/// determinant evaluations and polynomial interpolation.
Vector char_poly_by_interpolation(const Matrix& jac);

/// Elementary symmetric polynomials e_0..e_n of the eigenvalues, from the
/// power traces via Newton's identities.
Vector elementary_from_traces(const Matrix& jac);

struct ClassifyConfig {
  std::vector<Vector> samples;
  std::vector<double> h_grid{0.1, 0.5, 1.0};
  /// Defaults to the dimension.
  std::optional<int> k_max;
  std::optional<Matrix> p_h;
  std::optional<Matrix> p_s;
  std::uint64_t seed = 0;
};

/// `count` seeded samples in [−1, 1]ⁿ.
ClassifyConfig default_classify_config(Index dim, std::uint64_t seed, std::size_t count = 20);

struct SampleVerdicts {
  bool det_condition = false;
  bool odd_traces = false;
  bool eig_pairing = false;
};

struct ClassReport {
  std::string field;
  DetConditionResult det_condition;
  OddTraceResult odd_traces;
  bool eig_pairing_pass = false;
  std::vector<std::complex<double>> unpaired;
  double divergence = 0.0;
  std::optional<SimilarityResult> similarity_h;
  std::optional<SimilarityResult> similarity_s;
  std::vector<SampleVerdicts> per_sample;
  /// The three characterisations of the determinant condition agree on every sample.
  bool equivalence_consistent = false;
  std::vector<Vector> samples;
  std::vector<double> h_grid;
  std::uint64_t seed = 0;
};

ClassReport classify(const VectorField& field, const ClassifyConfig& config);

class Rng;

/// Seeded n×n matrix (2 ≤ n ≤ 4) whose spectrum is symmetric about zero:
/// JS for even n, a Hamiltonian block with a trailing zero block for odd n,
/// conjugated by a random invertible matrix.
Matrix random_paired_matrix(Index n, Rng& rng);

/// Seeded n×n matrix with nonzero trace, so its spectrum is not paired.
Matrix random_generic_matrix(Index n, Rng& rng);

nlohmann::json to_json(const ClassReport& report);

}  // namespace vprk
