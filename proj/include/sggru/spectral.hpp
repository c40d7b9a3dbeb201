#pragma once

#include "sggru/graph.hpp"
#include "sggru/types.hpp"

namespace sggru {

/// Eigen-decomposition of a symmetric matrix: values ascending, vectors the
/// matching orthonormal columns.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

/// Cyclic Jacobi eigensolver for symmetric matrices. The input must be
/// symmetric within `symmetry_tol` per entry. Rotations sweep the upper
/// triangle in row order until the off-diagonal Frobenius norm drops below
/// 1e-12 * ||A||_F, capped at `max_sweeps` sweeps (numerical_error beyond).
/// Eigenvalues are sorted ascending; each eigenvector is sign-fixed so its
/// first component of largest magnitude is nonnegative.
SymmetricEigen symmetric_eigen(const Matrix& matrix, double symmetry_tol = 1e-12,
                               int max_sweeps = 100);

/// Laplacian spectrum: the carrier of the graph Fourier transform.
/// Eigenvalues are nonnegative (tiny negative roundoff is clamped to zero)
/// and ascending; eigenvector columns are orthonormal and aligned.
class Spectrum {
 public:
  static Spectrum from_laplacian(const Matrix& laplacian);
  static Spectrum from_graph(const Graph& graph);

  /// Rebuilds a Spectrum from cached values; validates orthonormality and
  /// reconstruction against the given Laplacian.
  static Spectrum from_parts(Vector eigenvalues, Matrix eigenvectors,
                             Matrix laplacian);

  int n_nodes() const { return static_cast<int>(eigenvalues_.size()); }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  const Matrix& laplacian() const { return laplacian_; }

 private:
  Spectrum(Vector values, Matrix vectors, Matrix laplacian)
      : eigenvalues_(std::move(values)),
        eigenvectors_(std::move(vectors)),
        laplacian_(std::move(laplacian)) {}

  Vector eigenvalues_;
  Matrix eigenvectors_;
  Matrix laplacian_;
};

/// Graph Fourier transform: projection onto the Laplacian eigenbasis.
Vector gft(const Vector& signal, const Spectrum& spectrum);

/// Inverse graph Fourier transform.
Vector igft(const Vector& coefficients, const Spectrum& spectrum);

}  // namespace sggru
