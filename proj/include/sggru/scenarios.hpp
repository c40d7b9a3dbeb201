#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sggru/data.hpp"
#include "sggru/pipeline.hpp"
#include "sggru/serialize.hpp"

namespace sggru {

enum class ScenarioKind { supervised, semisupervised, noise, missing };

std::string scenario_kind_name(ScenarioKind kind);

/// Declarative experiment description: dataset, sampling fractions, model
/// bandwidth, corruption, and training protocol.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::supervised;

  std::optional<SyntheticSpec> synthetic;  // one of synthetic / source
  DatasetSource source;

  std::vector<double> sample_fractions{0.5};
  int freq_count = 0;  // 0 means floor(M/3)
  std::optional<FrequencyMode> freq_mode;  // default: smallest for
                                           // semisupervised, dominant otherwise
  int calibration_snapshots = 100;

  std::optional<CorruptionSpec> corruption;
  int repeats = 5;  // corruption realizations (noise/missing only)

  TrainConfig train;
  double mape_scale = 1.0;   // unit conversion applied before MAPE only
  double mape_offset = 0.0;
  std::string out_dir = "out";
  bool plot_data = false;

  void validate() const;
};

Json scenario_config_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_config_from_json(const Json& j);
std::string config_hash(const ScenarioConfig& config);

/// One trained-and-evaluated experiment (a single fraction and repeat).
struct ScenarioRun {
  double sample_fraction = 1.0;
  int repeat_index = 0;
  IndexList sample_nodes;
  int m = 0;
  int k = 0;
  double sv_min = 0.0;
  bool ill_conditioned = false;
  long long flops = 0;
  std::string plan_hash_hex;
  std::string model_hash_hex;
  MetricsReport metrics;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  double train_seconds = 0.0;
  double test_seconds = 0.0;
  int mask_size_min = 0;  // missing scenario: effective per-timestep sizes
  int mask_size_max = 0;
  AbsentMask missing_mask;  // injected absences (missing scenario only)
  // Plot payloads, filled when requested: per test window, original units.
  std::vector<Vector> predictions;
  std::vector<Vector> truths;
  std::vector<int> label_indices;
};

struct FractionAggregate {
  double sample_fraction = 1.0;
  int repeats = 0;
  double mae_mean = 0.0, mae_std = 0.0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double mape_mean = 0.0, mape_std = 0.0;
};

struct ScenarioResult {
  std::string scenario;
  std::string model_kind;  // "sggru" or "baseline_gru"
  std::string config_hash_hex;
  std::vector<ScenarioRun> runs;
  std::vector<FractionAggregate> aggregates;
};

ScenarioResult run_supervised(const ScenarioConfig& config);
ScenarioResult run_semisupervised(const ScenarioConfig& config);
ScenarioResult run_noise(const ScenarioConfig& config);
ScenarioResult run_missing(const ScenarioConfig& config);
/// Same protocol as the configured scenario, with the plain GRU +
/// interpolation baseline instead of the full model.
ScenarioResult run_baseline_gru(const ScenarioConfig& config);
/// Dispatch on config.scenario.
ScenarioResult run_scenario(const ScenarioConfig& config);

/// Writes report.json / report.csv / per-run history CSVs (all byte
/// deterministic for a fixed config and seed) plus timings.json (wall clock,
/// excluded from the deterministic set) and optional plot CSVs.
void write_scenario_outputs(const ScenarioResult& result, const ScenarioConfig& config);

Json scenario_report_json(const ScenarioResult& result);

}  // namespace sggru
