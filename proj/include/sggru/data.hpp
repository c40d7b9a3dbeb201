#pragma once

#include <optional>
#include <string>

#include "sggru/pipeline.hpp"
#include "sggru/rng.hpp"
#include "sggru/spectral.hpp"

namespace sggru {

enum class CorruptionKind { noise, missing };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::noise;
  double noise_ratio = 0.0;       // sigma_eta = ratio * sigma_x
  double missing_fraction = 0.0;  // per-timestep absent fraction, in [0, 1)
  std::uint64_t seed = 0;
};

// ---- CSV surfaces ----

/// Header-less numeric grid, comma separated. Parse failures report the
/// offending line number.
Matrix load_matrix_csv(const std::string& path);
void save_matrix_csv(const Matrix& matrix, const std::string& path);

struct SignalsCsv {
  Matrix signals;  // N x T (transposed from the row-per-timestep file)
  AbsentMask absent;
};

/// Signals file: T rows x N columns, optional header row, `NaN` literals
/// converted to absent-mask entries.
SignalsCsv load_signals_csv(const std::string& path);
void save_signals_csv(const Matrix& signals, const std::string& path,
                      const AbsentMask* absent = nullptr);

/// Station metadata: `id,lat,lon,alt` with a header row.
std::vector<NodeMeta> load_meta_csv(const std::string& path);
void save_meta_csv(const std::vector<NodeMeta>& meta, const std::string& path);

/// Absent-cell list as `t,node` rows with a header.
void save_mask_csv(const AbsentMask& mask, const std::string& path);
AbsentMask load_mask_csv(const std::string& path, int n_steps);

// ---- Dataset assembly ----

enum class GraphBuilderKind { raw, knn, rbf };

struct DatasetSource {
  std::string signals_csv;
  std::string adjacency_csv;  // raw weights, or binary support for rbf
  std::string meta_csv;       // station records for knn
  GraphBuilderKind builder = GraphBuilderKind::raw;
  int knn_k = 10;
  int rbf_window = 1000;
  std::string units;
};

struct LoadedDataset {
  TimeSeriesDataset dataset;  // signals finite (absent cells filled)
  AbsentMask absent;          // where the file had NaN
};

LoadedDataset load_dataset(const DatasetSource& source);

// ---- Synthetic data ----

/// Ring plus random chords; connected by construction, weights in [0.5, 1.5].
Graph random_connected_graph(int n, Rng& rng);
Graph random_connected_graph(int n, std::uint64_t seed);

struct SyntheticSpec {
  int n_nodes = 20;
  int n_steps = 500;
  IndexList freq_indices{0, 1, 2};
  double ar_coeff = 0.95;  // order-1 autoregression on the band coefficients
  double snr_db = 20.0;    // band-to-residual energy ratio; +inf = bandlimited
  std::uint64_t seed = 0;
};

/// Snapshots x^t = U_{:,F} a^t + eta^t with a^t a seeded stationary AR(1)
/// and eta^t an off-band residual scaled per snapshot to the requested SNR.
TimeSeriesDataset generate_synthetic(const SyntheticSpec& spec);

// ---- Corruption operators ----

struct CorruptedDataset {
  TimeSeriesDataset clean;  // ground truth, untouched
  Matrix corrupted;         // observed view (equals clean for missing kind)
  AbsentMask absent;        // nonempty for missing kind
};

/// Population standard deviation over every entry of the series.
double dataset_std(const Matrix& signals);

/// Adds i.i.d. zero-mean Gaussian noise with sigma = ratio x dataset std.
/// ratio 0 is an exact identity.
CorruptedDataset inject_noise(const TimeSeriesDataset& dataset,
                              const CorruptionSpec& spec);

/// Marks round(fraction x N) nodes absent independently per timestep.
CorruptedDataset inject_missing(const TimeSeriesDataset& dataset,
                                const CorruptionSpec& spec);

/// Fills each absent value with the mean of its present graph neighbors;
/// nodes whose whole neighborhood is absent fall back to `fallback`.
/// Present entries are returned bit-identical.
Vector one_hop_fill(const Vector& snapshot, const IndexList& absent_nodes,
                    const Graph& graph, const Vector& fallback);

/// Sequential fill over the series: neighbor mean, else the previous filled
/// value, else (at t = 0) the mean of all present entries.
Matrix fill_missing(const Matrix& signals, const AbsentMask& absent,
                    const Graph& graph);

}  // namespace sggru
