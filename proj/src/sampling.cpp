#include "sggru/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace sggru {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kConditionWarn = 1e8;

void validate_indices(const IndexList& indices, int bound, const char* what) {
  std::set<int> seen;
  for (int idx : indices) {
    require(idx >= 0 && idx < bound, std::string(what) + ": index out of range");
    require(seen.insert(idx).second, std::string(what) + ": duplicate index");
  }
}

Matrix gather_rows(const Matrix& u, const IndexList& rows, const IndexList& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(i, j) = u(rows[i], cols[j]);
    }
  }
  return out;
}

Matrix gather_cols(const Matrix& u, const IndexList& cols) {
  Matrix out(u.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(j) = u.col(cols[j]);
  }
  return out;
}

}  // namespace

Vector singular_values_via_gram(const Matrix& matrix) {
  const bool wide = matrix.rows() > matrix.cols();
  const Matrix gram = wide ? Matrix(matrix.transpose() * matrix)
                           : Matrix(matrix * matrix.transpose());
  SymmetricEigen eig = symmetric_eigen(gram);
  Vector sv(eig.values.size());
  for (int i = 0; i < sv.size(); ++i) {
    sv(i) = std::sqrt(std::max(0.0, eig.values(i)));
  }
  return sv;
}

Matrix build_sampling_operator(const IndexList& sample_nodes, int n_nodes) {
  require(!sample_nodes.empty(), "sampling operator: empty sample set");
  validate_indices(sample_nodes, n_nodes, "sampling operator");
  Matrix psi = Matrix::Zero(sample_nodes.size(), n_nodes);
  for (std::size_t m = 0; m < sample_nodes.size(); ++m) {
    psi(m, sample_nodes[m]) = 1.0;
  }
  return psi;
}

AdmissibilityReport check_admissibility(const IndexList& sample_nodes,
                                        const IndexList& freq_indices,
                                        const Spectrum& spectrum) {
  const int n = spectrum.n_nodes();
  const int k = static_cast<int>(freq_indices.size());
  validate_indices(sample_nodes, n, "admissibility");
  validate_indices(freq_indices, n, "admissibility");
  require(k >= 1 && k <= n, "admissibility: frequency set size out of range");

  AdmissibilityReport report;
  const Vector sv = singular_values_via_gram(
      gather_rows(spectrum.eigenvectors(), sample_nodes, freq_indices));
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > kRankTol) ++rank;
  }
  report.rank_ok = (rank == k);
  report.sv_min = (static_cast<int>(sample_nodes.size()) >= k) ? sv(0) : 0.0;

  std::set<int> sampled(sample_nodes.begin(), sample_nodes.end());
  IndexList complement;
  for (int v = 0; v < n; ++v) {
    if (!sampled.count(v)) complement.push_back(v);
  }
  if (complement.empty()) {
    report.sv_max_complement = 0.0;
  } else {
    const Vector sv_c = singular_values_via_gram(
        gather_rows(spectrum.eigenvectors(), complement, freq_indices));
    report.sv_max_complement = sv_c(sv_c.size() - 1);
  }
  return report;
}

Matrix build_interpolator(const IndexList& sample_nodes,
                          const IndexList& freq_indices,
                          const Spectrum& spectrum,
                          InterpolatorDiagnostics* diag) {
  const AdmissibilityReport adm =
      check_admissibility(sample_nodes, freq_indices, spectrum);
  if (!adm.rank_ok) {
    throw numerical_error(
        "interpolator: sampling set is inadmissible for the frequency set");
  }

  const Matrix u_f = gather_cols(spectrum.eigenvectors(), freq_indices);
  const Matrix u_sf = gather_rows(spectrum.eigenvectors(), sample_nodes, freq_indices);

  // pinv(U_SF) = Q W^+ Q^T U_SF^T from the K x K Gram eigen pairs; directions
  // whose singular value falls below 1e-10 x the largest are dropped.
  const Matrix gram = u_sf.transpose() * u_sf;
  SymmetricEigen eig = symmetric_eigen(gram);
  const int k = static_cast<int>(freq_indices.size());
  Vector sv(k);
  for (int i = 0; i < k; ++i) sv(i) = std::sqrt(std::max(0.0, eig.values(i)));
  const double sv_max = sv(k - 1);
  const double cutoff = kRankTol * sv_max;
  Vector inv_w = Vector::Zero(k);
  double sv_min_kept = sv_max;
  for (int i = 0; i < k; ++i) {
    if (sv(i) >= cutoff && sv(i) > 0.0) {
      inv_w(i) = 1.0 / eig.values(i);
      sv_min_kept = std::min(sv_min_kept, sv(i));
    }
  }
  if (diag) {
    diag->sv_min = sv(0);
    diag->sv_max = sv_max;
    diag->condition_number = sv_max / sv_min_kept;
    diag->ill_conditioned = diag->condition_number > kConditionWarn;
  }
  const Matrix pinv =
      eig.vectors * inv_w.asDiagonal() * eig.vectors.transpose() * u_sf.transpose();
  return u_f * pinv;
}

IndexList select_sampling_set_greedy(const Spectrum& spectrum,
                                     const IndexList& freq_indices,
                                     int m_target) {
  const int n = spectrum.n_nodes();
  const int k = static_cast<int>(freq_indices.size());
  validate_indices(freq_indices, n, "greedy selection");
  require(k >= 1, "greedy selection: empty frequency set");
  require(m_target >= k && m_target <= n,
          "greedy selection: m_target must lie in [K, N]");

  const Matrix u_f = gather_cols(spectrum.eigenvectors(), freq_indices);
  IndexList selected;
  std::vector<char> taken(n, 0);
  Matrix rows(m_target, k);        // sampled rows of U_{:,F}, filled as S grows
  Matrix gram_rows(m_target, m_target);  // A A^T of the rows selected so far
  Matrix gram_cols = Matrix::Zero(k, k); // A^T A of the rows selected so far

  for (int step = 0; step < m_target; ++step) {
    const int r = step + 1;  // rows after this addition
    int best_node = -1;
    double best_score = -1.0;
    for (int v = 0; v < n; ++v) {
      if (taken[v]) continue;
      const Vector u = u_f.row(v).transpose();
      double score;
      if (r <= k) {
        // Border the cached row Gram with the candidate row.
        Matrix g(r, r);
        g.topLeftCorner(step, step) = gram_rows.topLeftCorner(step, step);
        if (step > 0) {
          const Vector cross = rows.topRows(step) * u;
          g.block(0, step, step, 1) = cross;
          g.block(step, 0, 1, step) = cross.transpose();
        }
        g(step, step) = u.squaredNorm();
        score = std::sqrt(std::max(0.0, symmetric_eigen(g).values(0)));
      } else {
        const Matrix g = gram_cols + u * u.transpose();
        score = std::sqrt(std::max(0.0, symmetric_eigen(g).values(0)));
      }
      if (score > best_score) {
        best_score = score;
        best_node = v;
      }
    }
    taken[best_node] = 1;
    selected.push_back(best_node);
    const Vector u = u_f.row(best_node).transpose();
    if (step > 0) {
      const Vector cross = rows.topRows(step) * u;
      gram_rows.block(0, step, step, 1) = cross;
      gram_rows.block(step, 0, 1, step) = cross.transpose();
    }
    gram_rows(step, step) = u.squaredNorm();
    rows.row(step) = u.transpose();
    gram_cols += u * u.transpose();
  }
  return selected;
}

double reconstruction_error_bound(double residual_norm, double sv_min) {
  require(sv_min > 0.0, "error bound: sv_min must be positive");
  require(residual_norm >= 0.0, "error bound: residual norm must be nonnegative");
  return residual_norm / sv_min;
}

BandlimitSplit bandlimit_split(const Vector& signal, const IndexList& freq_indices,
                               const Spectrum& spectrum) {
  validate_indices(freq_indices, spectrum.n_nodes(), "bandlimit split");
  Vector coeffs = gft(signal, spectrum);
  Vector band = Vector::Zero(coeffs.size());
  for (int idx : freq_indices) band(idx) = coeffs(idx);
  BandlimitSplit split;
  split.bandlimited_part = igft(band, spectrum);
  // The residual is the definitional complement; reassembly is exact up to
  // the one rounding of this subtraction.
  split.residual = signal - split.bandlimited_part;
  split.epsilon = split.residual.norm();
  return split;
}

IndexList choose_frequency_set(FrequencyMode mode, int k, const Spectrum& spectrum,
                               const Matrix* calibration) {
  const int n = spectrum.n_nodes();
  require(k >= 1 && k <= n, "frequency set: k out of range");
  if (mode == FrequencyMode::smallest) {
    IndexList indices(k);
    std::iota(indices.begin(), indices.end(), 0);
    return indices;
  }
  require(calibration != nullptr && calibration->cols() > 0,
          "frequency set: dominant mode needs calibration snapshots");
  require(calibration->rows() == n, "frequency set: calibration dimension mismatch");

  Vector energy = Vector::Zero(n);
  for (int c = 0; c < calibration->cols(); ++c) {
    const Vector coeffs = spectrum.eigenvectors().transpose() * calibration->col(c);
    energy += coeffs.cwiseAbs2();
  }
  energy /= static_cast<double>(calibration->cols());

  IndexList order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return energy(a) > energy(b); });
  IndexList chosen(order.begin(), order.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

SamplingPlan build_plan(const IndexList& sample_nodes, const IndexList& freq_indices,
                        const Spectrum& spectrum) {
  const int n = spectrum.n_nodes();
  require(static_cast<int>(freq_indices.size()) <= static_cast<int>(sample_nodes.size()),
          "plan: need K <= M");
  SamplingPlan plan;
  plan.n_nodes = n;
  plan.sample_nodes = sample_nodes;
  plan.freq_indices = freq_indices;
  plan.sampling_matrix = build_sampling_operator(sample_nodes, n);

  InterpolatorDiagnostics diag;
  plan.interpolator = build_interpolator(sample_nodes, freq_indices, spectrum, &diag);
  plan.sv_min = diag.sv_min;
  plan.condition_number = diag.condition_number;
  plan.ill_conditioned = diag.ill_conditioned;

  const Matrix u_sf =
      gather_rows(spectrum.eigenvectors(), sample_nodes, freq_indices);
  plan.spectral_interpolator = plan.interpolator * u_sf;
  plan.band_basis = gather_cols(spectrum.eigenvectors(), freq_indices);
  return plan;
}

int default_band_size(int m) { return std::max(1, m / 3); }

}  // namespace sggru
