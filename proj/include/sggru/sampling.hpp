#pragma once

#include "sggru/spectral.hpp"
#include "sggru/types.hpp"

namespace sggru {

/// Rank/singular-value diagnostics for a (sample set, frequency set) pair.
/// `rank_ok` holds iff the sampled eigenvector submatrix has full column
/// rank; equivalently the complement submatrix has largest singular value
/// strictly below one.
struct AdmissibilityReport {
  bool rank_ok = false;
  double sv_min = 0.0;             // smallest singular value of Psi_S U_{:,F}
  double sv_max_complement = 0.0;  // largest singular value of U_{Sbar,F}
};

struct InterpolatorDiagnostics {
  double sv_min = 0.0;
  double sv_max = 0.0;
  double condition_number = 0.0;
  bool ill_conditioned = false;  // condition number above 1e8
};

/// Sampling/interpolation operator pair for a fixed node subset S and
/// frequency subset F, with the spectral-branch interpolator and the
/// conditioning diagnostics. Immutable once built; training never touches
/// these matrices.
struct SamplingPlan {
  IndexList sample_nodes;         // S, ordered, |S| = M
  IndexList freq_indices;         // F, ordered, |F| = K
  Matrix sampling_matrix;         // M x N, one 1 per row
  Matrix interpolator;            // N x M
  Matrix spectral_interpolator;   // N x K
  Matrix band_basis;              // N x K, the frozen eigenvector columns U_{:,F}
  double sv_min = 0.0;
  double condition_number = 0.0;
  bool ill_conditioned = false;
  int n_nodes = 0;

  int m() const { return static_cast<int>(sample_nodes.size()); }
  int k() const { return static_cast<int>(freq_indices.size()); }
  double cos_theta() const { return sv_min; }
};

/// Singular values (ascending) of a dense matrix, computed from the Gram
/// matrix on its smaller side with the symmetric Jacobi solver.
Vector singular_values_via_gram(const Matrix& matrix);

/// M x N selection matrix: row m has a single 1 in column sample_nodes[m].
Matrix build_sampling_operator(const IndexList& sample_nodes, int n_nodes);

AdmissibilityReport check_admissibility(const IndexList& sample_nodes,
                                        const IndexList& freq_indices,
                                        const Spectrum& spectrum);

/// Least-squares interpolator U_{:,F} pinv(Psi_S U_{:,F}); the pseudo-inverse
/// is formed by eigendecomposition of the K x K Gram matrix, with singular
/// values below 1e-10 x the largest treated as zero. Throws numerical_error
/// when the pair is inadmissible; conditioning is reported through `diag`.
Matrix build_interpolator(const IndexList& sample_nodes,
                          const IndexList& freq_indices,
                          const Spectrum& spectrum,
                          InterpolatorDiagnostics* diag = nullptr);

/// Greedy E-optimal selection: grows S one node at a time, each step adding
/// the node that maximizes the smallest singular value of the sampled rows
/// of U_{:,F}. Ties go to the lowest node index.
IndexList select_sampling_set_greedy(const Spectrum& spectrum,
                                     const IndexList& freq_indices,
                                     int m_target);

/// Worst-case interpolation error bound ||eta|| / sv_min for an
/// approximately bandlimited signal.
double reconstruction_error_bound(double residual_norm, double sv_min);

/// Decomposition of a signal into its F-bandlimited part and the orthogonal
/// residual, with epsilon = ||residual||_2.
struct BandlimitSplit {
  Vector bandlimited_part;
  Vector residual;
  double epsilon = 0.0;
};

BandlimitSplit bandlimit_split(const Vector& signal, const IndexList& freq_indices,
                               const Spectrum& spectrum);

enum class FrequencyMode { smallest, dominant };

/// `smallest`: indices of the k smallest eigenvalues. `dominant`: indices of
/// the k largest average squared spectral coefficients over the calibration
/// snapshots (columns of `calibration`). Returned ascending.
IndexList choose_frequency_set(FrequencyMode mode, int k, const Spectrum& spectrum,
                               const Matrix* calibration = nullptr);

/// Assembles the full plan (operators, diagnostics) for S and F.
SamplingPlan build_plan(const IndexList& sample_nodes, const IndexList& freq_indices,
                        const Spectrum& spectrum);

/// Default model bandwidth: floor(M/3), at least 1.
int default_band_size(int m);

}  // namespace sggru
