#include "sggru/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace sggru {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto begin = field.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
      fields.emplace_back();
    } else {
      const auto end = field.find_last_not_of(" \t\r");
      fields.push_back(field.substr(begin, end - begin + 1));
    }
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  try {
    std::size_t used = 0;
    out = std::stod(text, &used);
    return used == text.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line_no,
                              const std::string& message) {
  throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": " + message);
}

}  // namespace

Matrix load_matrix_csv(const std::string& path) {
  const auto lines = read_lines(path);
  require(!lines.empty(), path + ": empty file");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) parse_error(path, i + 1, "blank line");
    const auto fields = split_fields(lines[i]);
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_double(fields[j], row[j])) {
        parse_error(path, i + 1, "unparseable value '" + fields[j] + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      parse_error(path, i + 1, "inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void save_matrix_csv(const Matrix& matrix, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  for (int i = 0; i < matrix.rows(); ++i) {
    for (int j = 0; j < matrix.cols(); ++j) {
      if (j) out << ',';
      out << format_double(matrix(i, j));
    }
    out << '\n';
  }
}

SignalsCsv load_signals_csv(const std::string& path) {
  auto lines = read_lines(path);
  require(!lines.empty(), path + ": empty file");

  // Header row detection: a line with any non-numeric, non-NaN token.
  std::size_t first_row = 0;
  {
    const auto fields = split_fields(lines[0]);
    for (const auto& f : fields) {
      double unused;
      if (!parse_double(f, unused)) {
        first_row = 1;
        break;
      }
    }
  }
  require(lines.size() > first_row, path + ": no data rows");

  const std::size_t n_steps = lines.size() - first_row;
  std::size_t n_nodes = 0;
  SignalsCsv out;
  out.absent.assign(n_steps, {});
  for (std::size_t t = 0; t < n_steps; ++t) {
    const std::size_t line_no = first_row + t + 1;
    const auto fields = split_fields(lines[first_row + t]);
    if (t == 0) {
      n_nodes = fields.size();
      out.signals.resize(n_nodes, n_steps);
    } else if (fields.size() != n_nodes) {
      parse_error(path, line_no, "inconsistent column count");
    }
    for (std::size_t n = 0; n < n_nodes; ++n) {
      double value;
      if (!parse_double(fields[n], value)) {
        parse_error(path, line_no, "unparseable value '" + fields[n] + "'");
      }
      if (std::isnan(value)) {
        out.absent[t].push_back(static_cast<int>(n));
        out.signals(n, t) = std::numeric_limits<double>::quiet_NaN();
      } else {
        out.signals(n, t) = value;
      }
    }
  }
  return out;
}

void save_signals_csv(const Matrix& signals, const std::string& path,
                      const AbsentMask* absent) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  const int n = static_cast<int>(signals.rows());
  const int t_total = static_cast<int>(signals.cols());
  require(absent == nullptr || static_cast<int>(absent->size()) == t_total,
          "signals csv: mask length mismatch");
  std::vector<std::uint8_t> is_absent(n, 0);
  for (int t = 0; t < t_total; ++t) {
    std::fill(is_absent.begin(), is_absent.end(), 0);
    if (absent) {
      for (int node : (*absent)[t]) is_absent[node] = 1;
    }
    for (int j = 0; j < n; ++j) {
      if (j) out << ',';
      out << (is_absent[j] ? "NaN" : format_double(signals(j, t)));
    }
    out << '\n';
  }
}

std::vector<NodeMeta> load_meta_csv(const std::string& path) {
  const auto lines = read_lines(path);
  require(lines.size() >= 2, path + ": expected header plus data rows");
  std::vector<NodeMeta> meta;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 4) parse_error(path, i + 1, "expected id,lat,lon,alt");
    NodeMeta m;
    m.id = fields[0];
    if (!parse_double(fields[1], m.lat) || !parse_double(fields[2], m.lon) ||
        !parse_double(fields[3], m.alt)) {
      parse_error(path, i + 1, "unparseable coordinate");
    }
    meta.push_back(std::move(m));
  }
  return meta;
}

void save_meta_csv(const std::vector<NodeMeta>& meta, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  out << "id,lat,lon,alt\n";
  for (const NodeMeta& m : meta) {
    out << m.id << ',' << format_double(m.lat) << ',' << format_double(m.lon) << ','
        << format_double(m.alt) << '\n';
  }
}

void save_mask_csv(const AbsentMask& mask, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  out << "t,node\n";
  for (std::size_t t = 0; t < mask.size(); ++t) {
    for (int node : mask[t]) out << t << ',' << node << '\n';
  }
}

AbsentMask load_mask_csv(const std::string& path, int n_steps) {
  const auto lines = read_lines(path);
  require(!lines.empty(), path + ": empty file");
  AbsentMask mask(n_steps);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    if (fields.size() != 2) parse_error(path, i + 1, "expected t,node");
    double t, node;
    if (!parse_double(fields[0], t) || !parse_double(fields[1], node)) {
      parse_error(path, i + 1, "unparseable index");
    }
    const int ti = static_cast<int>(t), ni = static_cast<int>(node);
    if (ti < 0 || ti >= n_steps) parse_error(path, i + 1, "timestep out of range");
    mask[ti].push_back(ni);
  }
  for (auto& step : mask) std::sort(step.begin(), step.end());
  return mask;
}

LoadedDataset load_dataset(const DatasetSource& source) {
  SignalsCsv signals = load_signals_csv(source.signals_csv);
  const int n = static_cast<int>(signals.signals.rows());

  Graph graph = [&]() {
    switch (source.builder) {
      case GraphBuilderKind::raw: {
        Matrix adjacency = load_matrix_csv(source.adjacency_csv);
        require(adjacency.rows() == n,
                "load dataset: adjacency node count does not match signals");
        return Graph::from_adjacency(std::move(adjacency));
      }
      case GraphBuilderKind::knn: {
        auto meta = load_meta_csv(source.meta_csv);
        require(static_cast<int>(meta.size()) == n,
                "load dataset: metadata row count does not match signals");
        return build_knn_graph(meta, source.knn_k);
      }
      case GraphBuilderKind::rbf: {
        Matrix binary = load_matrix_csv(source.adjacency_csv);
        require(binary.rows() == n,
                "load dataset: adjacency node count does not match signals");
        const int window = std::min<int>(source.rbf_window,
                                         static_cast<int>(signals.signals.cols()));
        require(signals.signals.leftCols(window).allFinite(),
                "load dataset: rbf window contains missing values");
        return build_rbf_adjacency(binary, signals.signals, window);
      }
    }
    throw std::invalid_argument("load dataset: unknown graph builder");
  }();

  bool any_absent = false;
  for (const auto& step : signals.absent) {
    if (!step.empty()) {
      any_absent = true;
      break;
    }
  }
  Matrix filled = any_absent
                      ? fill_missing(signals.signals, signals.absent, graph)
                      : std::move(signals.signals);
  return LoadedDataset{
      make_dataset(std::move(filled), std::move(graph), source.units),
      std::move(signals.absent)};
}

Graph random_connected_graph(int n, Rng& rng) {
  require(n >= 3, "random graph: need at least 3 nodes");
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    a(i, j) = a(j, i) = 1.0;
  }
  for (int attempt = 0; attempt < n / 2; ++attempt) {
    const int u = rng.uniform_int(n);
    const int v = rng.uniform_int(n);
    if (u == v || a(u, v) != 0.0) continue;
    const double w = rng.uniform(0.5, 1.5);
    a(u, v) = a(v, u) = w;
  }
  return Graph::from_adjacency(std::move(a));
}

Graph random_connected_graph(int n, std::uint64_t seed) {
  Rng rng(seed);
  return random_connected_graph(n, rng);
}

TimeSeriesDataset generate_synthetic(const SyntheticSpec& spec) {
  require(spec.n_nodes >= 3, "synthetic: need at least 3 nodes");
  require(spec.n_steps >= 2, "synthetic: need at least 2 steps");
  require(!spec.freq_indices.empty(), "synthetic: empty frequency set");
  if (!(std::abs(spec.ar_coeff) < 1.0)) {
    throw numerical_error("synthetic: unstable temporal model");
  }

  Rng rng(spec.seed);
  Graph graph = random_connected_graph(spec.n_nodes, rng);
  const Spectrum spectrum = Spectrum::from_graph(graph);

  const int n = spec.n_nodes;
  const int k = static_cast<int>(spec.freq_indices.size());
  std::vector<std::uint8_t> in_band(n, 0);
  for (int f : spec.freq_indices) {
    require(f >= 0 && f < n, "synthetic: frequency index out of range");
    in_band[f] = 1;
  }
  IndexList off_band;
  for (int i = 0; i < n; ++i) {
    if (!in_band[i]) off_band.push_back(i);
  }

  Matrix band_basis(n, k);
  for (int j = 0; j < k; ++j) {
    band_basis.col(j) = spectrum.eigenvectors().col(spec.freq_indices[j]);
  }
  Matrix off_basis(n, off_band.size());
  for (std::size_t j = 0; j < off_band.size(); ++j) {
    off_basis.col(j) = spectrum.eigenvectors().col(off_band[j]);
  }

  const double stationary_std = 1.0 / std::sqrt(1.0 - spec.ar_coeff * spec.ar_coeff);
  Vector coeffs(k);
  for (int j = 0; j < k; ++j) coeffs(j) = stationary_std * rng.gaussian();

  const bool bandlimited = std::isinf(spec.snr_db);
  const double residual_gain =
      bandlimited ? 0.0 : std::pow(10.0, -spec.snr_db / 20.0);

  Matrix signals(n, spec.n_steps);
  for (int t = 0; t < spec.n_steps; ++t) {
    if (t > 0) {
      for (int j = 0; j < k; ++j) {
        coeffs(j) = spec.ar_coeff * coeffs(j) + rng.gaussian();
      }
    }
    Vector snapshot = band_basis * coeffs;
    if (!bandlimited && !off_band.empty()) {
      Vector raw(off_band.size());
      for (int j = 0; j < raw.size(); ++j) raw(j) = rng.gaussian();
      const double raw_norm = raw.norm();
      if (raw_norm > 0.0) {
        // ||residual|| = ||band part|| x 10^(-snr/20), exact per snapshot.
        raw *= residual_gain * snapshot.norm() / raw_norm;
        snapshot += off_basis * raw;
      }
    }
    signals.col(t) = snapshot;
  }
  return make_dataset(std::move(signals), std::move(graph), "synthetic");
}

double dataset_std(const Matrix& signals) {
  const double mean = signals.mean();
  const double var = (signals.array() - mean).square().mean();
  return std::sqrt(var);
}

CorruptedDataset inject_noise(const TimeSeriesDataset& dataset,
                              const CorruptionSpec& spec) {
  require(spec.kind == CorruptionKind::noise, "inject_noise: wrong corruption kind");
  require(spec.noise_ratio >= 0.0, "inject_noise: ratio must be nonnegative");
  CorruptedDataset out{dataset, dataset.signals, {}};
  if (spec.noise_ratio == 0.0) return out;

  const double sigma = spec.noise_ratio * dataset_std(dataset.signals);
  Rng rng(spec.seed);
  for (int t = 0; t < out.corrupted.cols(); ++t) {
    for (int n = 0; n < out.corrupted.rows(); ++n) {
      out.corrupted(n, t) += sigma * rng.gaussian();
    }
  }
  return out;
}

CorruptedDataset inject_missing(const TimeSeriesDataset& dataset,
                                const CorruptionSpec& spec) {
  require(spec.kind == CorruptionKind::missing, "inject_missing: wrong corruption kind");
  require(spec.missing_fraction >= 0.0 && spec.missing_fraction < 1.0,
          "inject_missing: fraction must lie in [0, 1)");
  const int n = static_cast<int>(dataset.signals.rows());
  const int t_total = static_cast<int>(dataset.signals.cols());
  const int per_step = static_cast<int>(std::lround(spec.missing_fraction * n));
  require(per_step < n, "inject_missing: fraction would blank whole timesteps");

  CorruptedDataset out{dataset, dataset.signals, AbsentMask(t_total)};
  if (per_step == 0) return out;
  Rng rng(spec.seed);
  for (int t = 0; t < t_total; ++t) {
    out.absent[t] = rng.sample_without_replacement(n, per_step);
  }
  return out;
}

Vector one_hop_fill(const Vector& snapshot, const IndexList& absent_nodes,
                    const Graph& graph, const Vector& fallback) {
  const int n = graph.n_nodes();
  require(snapshot.size() == n, "one_hop_fill: snapshot size mismatch");
  require(fallback.size() == n, "one_hop_fill: fallback size mismatch");
  std::vector<std::uint8_t> absent(n, 0);
  for (int node : absent_nodes) {
    require(node >= 0 && node < n, "one_hop_fill: node index out of range");
    absent[node] = 1;
  }

  Vector filled = snapshot;
  const Matrix& a = graph.adjacency();
  for (int node : absent_nodes) {
    double sum = 0.0;
    int count = 0;
    for (int m = 0; m < n; ++m) {
      if (a(node, m) != 0.0 && !absent[m]) {
        sum += snapshot(m);
        ++count;
      }
    }
    filled(node) = count > 0 ? sum / static_cast<double>(count) : fallback(node);
  }
  return filled;
}

Matrix fill_missing(const Matrix& signals, const AbsentMask& absent,
                    const Graph& graph) {
  const int n = static_cast<int>(signals.rows());
  const int t_total = static_cast<int>(signals.cols());
  require(static_cast<int>(absent.size()) == t_total,
          "fill_missing: mask length mismatch");

  // Mean of the present entries only; absent cells are never read.
  double present_sum = 0.0;
  long present_count = 0;
  {
    std::vector<std::uint8_t> is_absent(n);
    for (int t = 0; t < t_total; ++t) {
      std::fill(is_absent.begin(), is_absent.end(), 0);
      for (int node : absent[t]) is_absent[node] = 1;
      for (int j = 0; j < n; ++j) {
        if (!is_absent[j]) {
          present_sum += signals(j, t);
          ++present_count;
        }
      }
    }
  }
  require(present_count > 0, "fill_missing: no present values");
  const Vector dataset_mean =
      Vector::Constant(n, present_sum / static_cast<double>(present_count));

  Matrix filled = signals;
  for (int t = 0; t < t_total; ++t) {
    if (absent[t].empty()) continue;
    const Vector fallback = (t == 0) ? dataset_mean : Vector(filled.col(t - 1));
    filled.col(t) = one_hop_fill(signals.col(t), absent[t], graph, fallback);
  }
  return filled;
}

}  // namespace sggru
