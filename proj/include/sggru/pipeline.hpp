#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sggru/graph.hpp"
#include "sggru/model.hpp"
#include "sggru/nn.hpp"
#include "sggru/types.hpp"

namespace sggru {

/// Absent node indices per timestep (empty inner lists where complete).
using AbsentMask = std::vector<IndexList>;

/// A multivariate series over a graph: column t of `signals` is the snapshot
/// at time t. Values must be finite after ingestion/cleaning.
struct TimeSeriesDataset {
  Matrix signals;  // N x T
  Graph graph;
  std::string units;
};

TimeSeriesDataset make_dataset(Matrix signals, Graph graph, std::string units = {});

struct Window {
  Matrix input;                           // tau x N, row per timestep
  Vector label;                           // snapshot at t + p
  std::vector<std::uint8_t> label_valid;  // empty means all entries valid
  int label_index = 0;
};

/// Sliding windows in chronological order; one per valid anchor, count
/// T - tau - p + 1. Inputs and labels may come from different series (e.g.
/// corrupted inputs, clean labels); an absent mask marks label entries to
/// exclude from losses.
std::vector<Window> make_windows(const Matrix& input_signals,
                                 const Matrix& label_signals, int tau, int p,
                                 const AbsentMask* label_absent = nullptr);
std::vector<Window> make_windows(const TimeSeriesDataset& dataset, int tau, int p);

struct SplitWindows {
  std::vector<Window> train, val, test;
};

/// Contiguous chronological partition, train earliest; floor allocation with
/// the remainder assigned to train. Throws if any split would be empty.
SplitWindows split_chronological(const std::vector<Window>& windows,
                                 const std::array<double, 3>& fractions);

/// Normalization by the maximum absolute value observed in the training
/// split; stored for the inverse transform before metrics.
struct Scaler {
  double scale = 1.0;
  double forward(double v) const { return v / scale; }
  double inverse(double v) const { return v * scale; }
};

/// Fits on window inputs; when `sample_nodes` is given only those columns
/// are scanned (the values the model actually sees).
Scaler fit_scaler(const std::vector<Window>& train_windows,
                  const IndexList* sample_nodes = nullptr);

/// Copies with inputs and labels divided by the scale.
std::vector<Window> apply_scaler(const std::vector<Window>& windows,
                                 const Scaler& scaler);

enum class LossMode { supervised, semisupervised };

struct TrainConfig {
  int tau = 10;
  int horizon = 1;
  int batch_size = 40;
  double lr0 = 1e-4;
  double decay_factor = 0.5;
  int decay_interval = 10;
  int max_epochs = 100;
  int patience = 5;
  std::uint64_t seed = 0;
  std::array<double, 3> split_fractions{0.70, 0.20, 0.10};
  LossMode loss_mode = LossMode::supervised;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  Scaler scaler;
  OptimizerState optimizer;  // state after the last completed epoch
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent
  Vector per_node_mae;
  int n_test = 0;
  std::string scenario;
  // Known/hidden breakdown, set when the plan leaves nodes unsampled.
  double mae_known = std::numeric_limits<double>::quiet_NaN();
  double mae_hidden = std::numeric_limits<double>::quiet_NaN();
};

struct EvalOptions {
  std::string scenario_tag;
  double mape_guard = 1e-6;  // |transformed truth| below this is excluded
  double mape_scale = 1.0;   // unit conversion applied before MAPE only
  double mape_offset = 0.0;
  bool node_breakdown = true;
  // When set, per-window predictions (original units) are appended here.
  std::vector<Vector>* predictions_out = nullptr;
};

namespace detail {

Matrix sample_columns(const Matrix& input, const IndexList& nodes);
Vector sample_entries(const Vector& label, const IndexList& nodes);

}  // namespace detail

/// Mini-batch RMSprop with step decay, chronological validation loss, early
/// stopping with the configured patience, and best-validation restore. Fully
/// deterministic for a fixed config and seed.
template <class Model>
TrainResult train(Model& model, const std::vector<Window>& train_windows,
                  const std::vector<Window>& val_windows, const TrainConfig& config) {
  config.validate();
  require(!train_windows.empty(), "train: empty training split");
  require(!val_windows.empty(), "train: empty validation split");

  const IndexList& sample_nodes = model.plan.sample_nodes;
  const bool semi = config.loss_mode == LossMode::semisupervised;

  TrainResult result;
  result.scaler = fit_scaler(train_windows, &sample_nodes);

  struct Prepared {
    Matrix input;   // tau x M, normalized
    Vector target;  // length N, normalized
    std::vector<std::uint8_t> valid;
  };
  auto prepare = [&](const std::vector<Window>& windows) {
    std::vector<Prepared> out;
    out.reserve(windows.size());
    for (const Window& w : windows) {
      Prepared p;
      p.input = detail::sample_columns(w.input, sample_nodes) / result.scaler.scale;
      if (semi) {
        require(w.label_valid.empty(),
                "train: masked labels unsupported in semisupervised mode");
        const Vector sampled =
            detail::sample_entries(w.label, sample_nodes) / result.scaler.scale;
        p.target = interpolation_target(sampled, model.plan);
      } else {
        p.target = w.label / result.scaler.scale;
        p.valid = w.label_valid;
      }
      out.push_back(std::move(p));
    }
    return out;
  };
  const std::vector<Prepared> train_set = prepare(train_windows);
  const std::vector<Prepared> val_set = prepare(val_windows);

  auto batch_loss_grads = [&](const std::vector<Prepared>& set,
                              const std::vector<int>& order, std::size_t begin,
                              std::size_t end, Vector* grads) {
    const double batch = static_cast<double>(end - begin);
    const double n = static_cast<double>(model.dims.n);
    long included = 0;
    bool masked = false;
    for (std::size_t i = begin; i < end; ++i) {
      const Prepared& p = set[order[i]];
      if (p.valid.empty()) {
        included += model.dims.n;
      } else {
        masked = true;
        for (std::uint8_t v : p.valid) included += v ? 1 : 0;
      }
    }
    require(included > 0, "train: batch has no usable label entries");
    double loss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const Prepared& p = set[order[i]];
      const auto trace = forward(model, p.input);
      Vector err = trace.prediction - p.target;
      if (!p.valid.empty()) {
        for (int j = 0; j < err.size(); ++j) {
          if (!p.valid[j]) err(j) = 0.0;
        }
      }
      loss += err.squaredNorm();
      if (grads) {
        const Vector dpred =
            masked ? Vector(2.0 * err / static_cast<double>(included))
                   : Vector(2.0 * err / (batch * n));
        *grads += grad_vector(model, backward(model, trace, dpred));
      }
    }
    return masked ? loss / static_cast<double>(included) : loss / (batch * n);
  };

  Vector params = param_vector(model);
  OptimizerState opt = OptimizerState::for_size(params.size(), config.lr0);
  opt.decay_factor = config.decay_factor;
  opt.decay_interval = config.decay_interval;

  std::vector<int> train_order(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) train_order[i] = static_cast<int>(i);
  std::vector<int> val_order(val_set.size());
  for (std::size_t i = 0; i < val_set.size(); ++i) val_order[i] = static_cast<int>(i);

  Rng rng(config.seed);
  Vector best_params = params;
  double best_val = std::numeric_limits<double>::infinity();
  int stall = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    opt.epoch = epoch - 1;  // completed epochs drive the decay schedule
    const double lr = opt.current_lr();
    rng.shuffle(train_order);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < train_set.size(); begin += config.batch_size) {
      const std::size_t end =
          std::min(begin + static_cast<std::size_t>(config.batch_size), train_set.size());
      Vector grads = Vector::Zero(params.size());
      const double loss = batch_loss_grads(train_set, train_order, begin, end, &grads);
      if (!std::isfinite(loss)) {
        throw numerical_error("train: divergence at epoch " + std::to_string(epoch));
      }
      rmsprop_step(params, grads, opt);
      set_param_vector(model, params);
      epoch_loss += loss * static_cast<double>(end - begin);
    }
    epoch_loss /= static_cast<double>(train_set.size());

    const double val_loss =
        batch_loss_grads(val_set, val_order, 0, val_set.size(), nullptr);
    if (!std::isfinite(val_loss)) {
      throw numerical_error("train: non-finite validation loss at epoch " +
                            std::to_string(epoch));
    }
    result.history.push_back({epoch, epoch_loss, val_loss, lr});

    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      result.best_epoch = epoch;
      stall = 0;
    } else {
      ++stall;
      if (stall >= config.patience) break;
    }
  }

  set_param_vector(model, best_params);
  result.best_val_loss = best_val;
  result.optimizer = std::move(opt);
  return result;
}

/// Metrics in original units on the test windows. MAE/RMSE/MAPE follow the
/// per-snapshot inner mean and the outer mean over snapshots; MAPE terms
/// with near-zero (transformed) truth are excluded.
template <class Model>
MetricsReport evaluate(const Model& model, const std::vector<Window>& test_windows,
                       const Scaler& scaler, const EvalOptions& opts = {}) {
  require(!test_windows.empty(), "evaluate: empty test set");
  const int n = model.dims.n;
  const IndexList& sample_nodes = model.plan.sample_nodes;
  std::vector<std::uint8_t> known(n, 0);
  for (int s : sample_nodes) known[s] = 1;

  MetricsReport report;
  report.scenario = opts.scenario_tag;
  report.n_test = static_cast<int>(test_windows.size());
  report.per_node_mae = Vector::Zero(n);
  Vector node_counts = Vector::Zero(n);

  double mae_sum = 0.0, rmse_sum = 0.0, mape_sum = 0.0;
  double known_sum = 0.0, hidden_sum = 0.0;
  long known_terms = 0, hidden_terms = 0;
  int mape_snapshots = 0;

  for (const Window& w : test_windows) {
    const Matrix input =
        detail::sample_columns(w.input, sample_nodes) / scaler.scale;
    const auto trace = forward(model, input);
    const Vector prediction = trace.prediction * scaler.scale;
    if (opts.predictions_out) opts.predictions_out->push_back(prediction);

    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    long valid_count = 0, pct_count = 0;
    for (int j = 0; j < n; ++j) {
      if (!w.label_valid.empty() && !w.label_valid[j]) continue;
      const double err = prediction(j) - w.label(j);
      abs_sum += std::abs(err);
      sq_sum += err * err;
      ++valid_count;
      report.per_node_mae(j) += std::abs(err);
      node_counts(j) += 1.0;
      if (known[j]) {
        known_sum += std::abs(err);
        ++known_terms;
      } else {
        hidden_sum += std::abs(err);
        ++hidden_terms;
      }
      const double truth_t = opts.mape_scale * w.label(j) + opts.mape_offset;
      if (std::abs(truth_t) >= opts.mape_guard) {
        pct_sum += std::abs(opts.mape_scale * err) / std::abs(truth_t);
        ++pct_count;
      }
    }
    require(valid_count > 0, "evaluate: snapshot with no usable labels");
    mae_sum += abs_sum / static_cast<double>(valid_count);
    rmse_sum += std::sqrt(sq_sum / static_cast<double>(valid_count));
    if (pct_count > 0) {
      mape_sum += pct_sum / static_cast<double>(pct_count);
      ++mape_snapshots;
    }
  }

  const double t_count = static_cast<double>(test_windows.size());
  report.mae = mae_sum / t_count;
  report.rmse = rmse_sum / t_count;
  report.mape =
      mape_snapshots > 0 ? 100.0 * mape_sum / static_cast<double>(mape_snapshots) : 0.0;
  for (int j = 0; j < n; ++j) {
    report.per_node_mae(j) =
        node_counts(j) > 0.0 ? report.per_node_mae(j) / node_counts(j) : 0.0;
  }
  if (opts.node_breakdown && hidden_terms > 0) {
    report.mae_known = known_sum / static_cast<double>(known_terms);
    report.mae_hidden = hidden_sum / static_cast<double>(hidden_terms);
  }
  return report;
}

}  // namespace sggru
