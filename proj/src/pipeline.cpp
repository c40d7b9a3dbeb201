#include "sggru/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace sggru {

TimeSeriesDataset make_dataset(Matrix signals, Graph graph, std::string units) {
  require(signals.rows() == graph.n_nodes(),
          "dataset: signal rows must match graph node count");
  require(signals.cols() > 0, "dataset: empty series");
  require(signals.allFinite(), "dataset: non-finite values after ingestion");
  return TimeSeriesDataset{std::move(signals), std::move(graph), std::move(units)};
}

namespace detail {

Matrix sample_columns(const Matrix& input, const IndexList& nodes) {
  Matrix out(input.rows(), nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    out.col(j) = input.col(nodes[j]);
  }
  return out;
}

Vector sample_entries(const Vector& label, const IndexList& nodes) {
  Vector out(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) out(j) = label(nodes[j]);
  return out;
}

}  // namespace detail

std::vector<Window> make_windows(const Matrix& input_signals,
                                 const Matrix& label_signals, int tau, int p,
                                 const AbsentMask* label_absent) {
  const int n = static_cast<int>(input_signals.rows());
  const int t_total = static_cast<int>(input_signals.cols());
  require(tau > 0 && p > 0, "windows: tau and horizon must be positive");
  require(label_signals.rows() == n && label_signals.cols() == t_total,
          "windows: input/label series shape mismatch");
  require(t_total >= tau + p, "windows: series shorter than tau + p");
  require(label_absent == nullptr ||
              static_cast<int>(label_absent->size()) == t_total,
          "windows: absent mask length mismatch");

  std::vector<Window> windows;
  windows.reserve(t_total - tau - p + 1);
  for (int anchor = tau - 1; anchor + p < t_total; ++anchor) {
    Window w;
    w.input.resize(tau, n);
    for (int i = 0; i < tau; ++i) {
      w.input.row(i) = input_signals.col(anchor - tau + 1 + i).transpose();
    }
    w.label_index = anchor + p;
    w.label = label_signals.col(w.label_index);
    if (label_absent && !(*label_absent)[w.label_index].empty()) {
      w.label_valid.assign(n, 1);
      for (int node : (*label_absent)[w.label_index]) w.label_valid[node] = 0;
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<Window> make_windows(const TimeSeriesDataset& dataset, int tau, int p) {
  return make_windows(dataset.signals, dataset.signals, tau, p);
}

SplitWindows split_chronological(const std::vector<Window>& windows,
                                 const std::array<double, 3>& fractions) {
  for (double f : fractions) {
    require(f > 0.0 && f < 1.0, "split: fractions must lie in (0, 1)");
  }
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) < 1e-9,
          "split: fractions must sum to 1");
  const int total = static_cast<int>(windows.size());
  int n_train = static_cast<int>(std::floor(fractions[0] * total));
  const int n_val = static_cast<int>(std::floor(fractions[1] * total));
  const int n_test = static_cast<int>(std::floor(fractions[2] * total));
  n_train += total - (n_train + n_val + n_test);  // remainder to train
  require(n_train > 0 && n_val > 0 && n_test > 0, "split: a split would be empty");

  SplitWindows out;
  out.train.assign(windows.begin(), windows.begin() + n_train);
  out.val.assign(windows.begin() + n_train, windows.begin() + n_train + n_val);
  out.test.assign(windows.begin() + n_train + n_val, windows.end());
  return out;
}

Scaler fit_scaler(const std::vector<Window>& train_windows,
                  const IndexList* sample_nodes) {
  require(!train_windows.empty(), "scaler: empty training split");
  double max_abs = 0.0;
  for (const Window& w : train_windows) {
    if (sample_nodes) {
      for (int node : *sample_nodes) {
        max_abs = std::max(max_abs, w.input.col(node).cwiseAbs().maxCoeff());
      }
    } else {
      max_abs = std::max(max_abs, w.input.cwiseAbs().maxCoeff());
    }
  }
  require(max_abs > 0.0, "scaler: all-zero training data");
  return Scaler{max_abs};
}

std::vector<Window> apply_scaler(const std::vector<Window>& windows,
                                 const Scaler& scaler) {
  std::vector<Window> out = windows;
  for (Window& w : out) {
    w.input /= scaler.scale;
    w.label /= scaler.scale;
  }
  return out;
}

void TrainConfig::validate() const {
  require(tau > 0 && horizon > 0, "config: tau and horizon must be positive");
  require(batch_size > 0, "config: batch size must be positive");
  require(lr0 > 0.0, "config: learning rate must be positive");
  require(decay_factor > 0.0 && decay_factor <= 1.0, "config: decay factor in (0, 1]");
  require(decay_interval > 0, "config: decay interval must be positive");
  require(max_epochs > 0, "config: max epochs must be positive");
  require(patience > 0 && patience <= max_epochs,
          "config: patience must lie in [1, max_epochs]");
  require(std::abs(split_fractions[0] + split_fractions[1] + split_fractions[2] - 1.0) <
              1e-9,
          "config: split fractions must sum to 1");
}

}  // namespace sggru
