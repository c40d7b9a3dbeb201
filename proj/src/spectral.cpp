#include "sggru/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sggru {

namespace {

double off_diagonal_norm(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  double sum = 0.0;
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      sum += 2.0 * a(p, q) * a(p, q);
    }
  }
  return std::sqrt(sum);
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& matrix, double symmetry_tol,
                               int max_sweeps) {
  const int n = static_cast<int>(matrix.rows());
  require(n > 0 && matrix.cols() == n, "symmetric_eigen: matrix must be square");
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(matrix(i, j) - matrix(j, i)) > symmetry_tol) {
        throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");
      }
    }
  }

  Matrix a = 0.5 * (matrix + matrix.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double threshold = 1e-12 * a.norm();

  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (++sweep > max_sweeps) {
      throw numerical_error("symmetric_eigen: no convergence within sweep budget");
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double guard = 100.0 * std::abs(apq);
        if (std::abs(a(p, p)) + guard == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + guard == std::abs(a(q, q))) {
          a(p, q) = a(q, p) = 0.0;  // below representable significance
          continue;
        }
        const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const double app = a(p, p);
        const double aqq = a(q, q);
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a(p, q) = a(q, p) = 0.0;

        for (int r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) < a(j, j); });

  SymmetricEigen result;
  result.values.resize(n);
  result.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    result.values(k) = a(order[k], order[k]);
    result.vectors.col(k) = v.col(order[k]);
    // Sign convention: first component of largest magnitude is nonnegative.
    int lead = 0;
    double best = std::abs(result.vectors(0, k));
    for (int r = 1; r < n; ++r) {
      const double m = std::abs(result.vectors(r, k));
      if (m > best) {
        best = m;
        lead = r;
      }
    }
    if (result.vectors(lead, k) < 0.0) result.vectors.col(k) = -result.vectors.col(k);
  }
  return result;
}

Spectrum Spectrum::from_laplacian(const Matrix& laplacian) {
  SymmetricEigen eig = symmetric_eigen(laplacian);
  const int n = static_cast<int>(eig.values.size());
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    if (eig.values(i) < 0.0) {
      if (eig.values(i) < -1e-10 * scale) {
        throw numerical_error("spectrum: matrix is not positive semi-definite");
      }
      eig.values(i) = 0.0;
    }
  }
  return Spectrum(std::move(eig.values), std::move(eig.vectors), laplacian);
}

Spectrum Spectrum::from_graph(const Graph& graph) {
  return from_laplacian(build_laplacian(graph));
}

Spectrum Spectrum::from_parts(Vector eigenvalues, Matrix eigenvectors,
                              Matrix laplacian) {
  const int n = static_cast<int>(eigenvalues.size());
  require(n > 0, "spectrum: empty eigenvalues");
  require(eigenvectors.rows() == n && eigenvectors.cols() == n,
          "spectrum: eigenvector matrix must be N x N");
  require(laplacian.rows() == n && laplacian.cols() == n,
          "spectrum: laplacian must be N x N");
  for (int i = 0; i + 1 < n; ++i) {
    require(eigenvalues(i) <= eigenvalues(i + 1), "spectrum: eigenvalues must ascend");
  }
  require(eigenvalues.minCoeff() >= 0.0, "spectrum: eigenvalues must be nonnegative");

  const Matrix gram = eigenvectors.transpose() * eigenvectors;
  const double ortho_err =
      (gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-10) {
    throw numerical_error("spectrum: eigenvectors are not orthonormal");
  }
  const Matrix rebuilt =
      eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  const double scale = std::max(1.0, laplacian.cwiseAbs().maxCoeff());
  if ((rebuilt - laplacian).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw numerical_error("spectrum: eigen pairs do not reconstruct the Laplacian");
  }
  return Spectrum(std::move(eigenvalues), std::move(eigenvectors), std::move(laplacian));
}

Vector gft(const Vector& signal, const Spectrum& spectrum) {
  require(signal.size() == spectrum.n_nodes(), "gft: dimension mismatch");
  return spectrum.eigenvectors().transpose() * signal;
}

Vector igft(const Vector& coefficients, const Spectrum& spectrum) {
  require(coefficients.size() == spectrum.n_nodes(), "igft: dimension mismatch");
  return spectrum.eigenvectors() * coefficients;
}

}  // namespace sggru
