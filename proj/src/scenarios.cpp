#include "sggru/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

namespace sggru {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

struct PreparedScenario {
  TimeSeriesDataset dataset;
  AbsentMask load_mask;
  Spectrum spectrum;
};

PreparedScenario prepare_scenario(const ScenarioConfig& config) {
  if (config.synthetic) {
    TimeSeriesDataset dataset = generate_synthetic(*config.synthetic);
    Spectrum spectrum = Spectrum::from_graph(dataset.graph);
    return {std::move(dataset), {}, std::move(spectrum)};
  }
  LoadedDataset loaded = load_dataset(config.source);
  Spectrum spectrum = Spectrum::from_graph(loaded.dataset.graph);
  return {std::move(loaded.dataset), std::move(loaded.absent), std::move(spectrum)};
}

bool mask_has_entries(const AbsentMask& mask) {
  return std::any_of(mask.begin(), mask.end(),
                     [](const IndexList& step) { return !step.empty(); });
}

struct RunInputs {
  Matrix input_signals;
  AbsentMask missing_mask;  // injected absences (missing scenario)
};

RunInputs observed_inputs(const ScenarioConfig& config, const PreparedScenario& prep,
                          int repeat) {
  switch (config.scenario) {
    case ScenarioKind::supervised:
    case ScenarioKind::semisupervised:
      return {prep.dataset.signals, {}};
    case ScenarioKind::noise: {
      CorruptionSpec spec = *config.corruption;
      spec.seed += static_cast<std::uint64_t>(repeat);
      return {inject_noise(prep.dataset, spec).corrupted, {}};
    }
    case ScenarioKind::missing: {
      CorruptionSpec spec = *config.corruption;
      spec.seed += static_cast<std::uint64_t>(repeat);
      CorruptedDataset corrupted = inject_missing(prep.dataset, spec);
      Matrix filled = mask_has_entries(corrupted.absent)
                          ? fill_missing(prep.dataset.signals, corrupted.absent,
                                         prep.dataset.graph)
                          : prep.dataset.signals;
      return {std::move(filled), std::move(corrupted.absent)};
    }
  }
  throw std::invalid_argument("scenario: unknown kind");
}

template <class Model>
ScenarioRun run_single(const ScenarioConfig& config, const PreparedScenario& prep,
                       double fraction, int repeat, Model& model,
                       const SamplingPlan& plan, const Matrix& input_signals,
                       const AbsentMask& missing_mask) {
  const int n = prep.dataset.graph.n_nodes();

  TrainConfig tc = config.train;
  tc.loss_mode = config.scenario == ScenarioKind::semisupervised
                     ? LossMode::semisupervised
                     : LossMode::supervised;

  const AbsentMask* label_mask =
      mask_has_entries(prep.load_mask) ? &prep.load_mask : nullptr;
  const auto windows = make_windows(input_signals, prep.dataset.signals, tc.tau,
                                    tc.horizon, label_mask);
  const SplitWindows split = split_chronological(windows, tc.split_fractions);

  ScenarioRun run;
  run.sample_fraction = fraction;
  run.repeat_index = repeat;
  run.sample_nodes = plan.sample_nodes;
  run.m = plan.m();
  run.k = plan.k();
  run.sv_min = plan.sv_min;
  run.ill_conditioned = plan.ill_conditioned;
  run.flops = estimate_flops(n, plan.m(), plan.k(), tc.tau);
  run.plan_hash_hex = plan_hash(plan);

  const auto train_start = Clock::now();
  TrainResult trained = train(model, split.train, split.val, tc);
  run.train_seconds = seconds_since(train_start);
  run.history = std::move(trained.history);
  run.best_epoch = trained.best_epoch;
  run.best_val_loss = trained.best_val_loss;
  run.model_hash_hex = model_hash(model);

  EvalOptions opts;
  opts.scenario_tag = scenario_kind_name(config.scenario);
  opts.mape_scale = config.mape_scale;
  opts.mape_offset = config.mape_offset;
  if (config.plot_data) opts.predictions_out = &run.predictions;

  const auto test_start = Clock::now();
  run.metrics = evaluate(model, split.test, trained.scaler, opts);
  run.test_seconds = seconds_since(test_start);

  if (config.plot_data) {
    for (const Window& w : split.test) {
      run.truths.push_back(w.label);
      run.label_indices.push_back(w.label_index);
    }
  }

  if (config.scenario == ScenarioKind::missing) {
    int lo = n, hi = 0;
    for (const auto& step : missing_mask) {
      const int size = static_cast<int>(step.size());
      lo = std::min(lo, size);
      hi = std::max(hi, size);
    }
    run.mask_size_min = missing_mask.empty() ? 0 : lo;
    run.mask_size_max = missing_mask.empty() ? 0 : hi;
    run.missing_mask = missing_mask;
  }
  return run;
}

ScenarioResult run_common(const ScenarioConfig& config, bool baseline) {
  config.validate();
  const PreparedScenario prep = prepare_scenario(config);
  const int n = prep.dataset.graph.n_nodes();
  const int t_total = static_cast<int>(prep.dataset.signals.cols());

  const bool corrupting = config.scenario == ScenarioKind::noise ||
                          config.scenario == ScenarioKind::missing;
  const std::vector<double> fractions =
      corrupting ? std::vector<double>{1.0} : config.sample_fractions;
  const int repeats = corrupting ? config.repeats : 1;

  ScenarioResult result;
  result.scenario = scenario_kind_name(config.scenario);
  result.model_kind = baseline ? "baseline_gru" : "sggru";
  result.config_hash_hex = config_hash(config);

  for (double fraction : fractions) {
    const int m = std::clamp(static_cast<int>(std::lround(fraction * n)), 1, n);
    // Node selection: natural order when everything is sampled, otherwise the
    // greedy search over the first M smallest-eigenvalue columns.
    IndexList sample_nodes;
    if (m == n) {
      sample_nodes.resize(n);
      std::iota(sample_nodes.begin(), sample_nodes.end(), 0);
    } else {
      IndexList selection_freqs(m);
      std::iota(selection_freqs.begin(), selection_freqs.end(), 0);
      sample_nodes = select_sampling_set_greedy(prep.spectrum, selection_freqs, m);
    }

    const int k = config.freq_count > 0 ? config.freq_count : default_band_size(m);
    const FrequencyMode mode = config.freq_mode.value_or(
        config.scenario == ScenarioKind::semisupervised ? FrequencyMode::smallest
                                                        : FrequencyMode::dominant);

    for (int repeat = 0; repeat < repeats; ++repeat) {
      RunInputs inputs = observed_inputs(config, prep, repeat);

      IndexList freqs;
      if (mode == FrequencyMode::dominant) {
        const int calib = std::min(config.calibration_snapshots, t_total);
        const Matrix calibration = inputs.input_signals.leftCols(calib);
        freqs = choose_frequency_set(mode, k, prep.spectrum, &calibration);
      } else {
        freqs = choose_frequency_set(mode, k, prep.spectrum);
      }
      const SamplingPlan plan = build_plan(sample_nodes, freqs, prep.spectrum);

      ScenarioRun run;
      if (baseline) {
        BaselineGruModel model = init_baseline(n, m, config.train.tau,
                                               config.train.horizon, plan,
                                               config.train.seed);
        run = run_single(config, prep, fraction, repeat, model, plan,
                         inputs.input_signals, inputs.missing_mask);
      } else {
        SgGruModel model = init_model(n, m, k, config.train.tau,
                                      config.train.horizon, plan,
                                      config.train.seed);
        run = run_single(config, prep, fraction, repeat, model, plan,
                         inputs.input_signals, inputs.missing_mask);
      }
      result.runs.push_back(std::move(run));
    }

    if (repeats > 1) {
      FractionAggregate agg;
      agg.sample_fraction = fraction;
      agg.repeats = repeats;
      auto stats = [&](auto metric, double& mean, double& sd) {
        double sum = 0.0;
        for (int r = 0; r < repeats; ++r) {
          sum += metric(result.runs[result.runs.size() - repeats + r]);
        }
        mean = sum / repeats;
        double var = 0.0;
        for (int r = 0; r < repeats; ++r) {
          const double d =
              metric(result.runs[result.runs.size() - repeats + r]) - mean;
          var += d * d;
        }
        sd = repeats > 1 ? std::sqrt(var / (repeats - 1)) : 0.0;
      };
      stats([](const ScenarioRun& r) { return r.metrics.mae; }, agg.mae_mean,
            agg.mae_std);
      stats([](const ScenarioRun& r) { return r.metrics.rmse; }, agg.rmse_mean,
            agg.rmse_std);
      stats([](const ScenarioRun& r) { return r.metrics.mape; }, agg.mape_mean,
            agg.mape_std);
      result.aggregates.push_back(agg);
    }
  }
  return result;
}

}  // namespace

std::string scenario_kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::supervised:
      return "supervised";
    case ScenarioKind::semisupervised:
      return "semisupervised";
    case ScenarioKind::noise:
      return "noise";
    case ScenarioKind::missing:
      return "missing";
  }
  return "unknown";
}

void ScenarioConfig::validate() const {
  require(synthetic.has_value() || !source.signals_csv.empty(),
          "scenario: dataset missing (synthetic or signals_csv)");
  require(!sample_fractions.empty(), "scenario: no sample fractions");
  for (double f : sample_fractions) {
    require(f > 0.0 && f <= 1.0, "scenario: sample fraction must lie in (0, 1]");
  }
  require(repeats >= 1, "scenario: repeats must be positive");
  require(calibration_snapshots >= 1, "scenario: calibration_snapshots must be positive");
  switch (scenario) {
    case ScenarioKind::noise:
      require(corruption.has_value() && corruption->kind == CorruptionKind::noise,
              "scenario: noise requires a noise corruption spec");
      break;
    case ScenarioKind::missing:
      require(corruption.has_value() && corruption->kind == CorruptionKind::missing,
              "scenario: missing requires a missing corruption spec");
      break;
    default:
      require(!corruption.has_value(),
              "scenario: corruption spec only applies to noise/missing");
      break;
  }
  train.validate();
}

ScenarioResult run_supervised(const ScenarioConfig& config) {
  require(config.scenario == ScenarioKind::supervised, "expected supervised config");
  return run_common(config, false);
}

ScenarioResult run_semisupervised(const ScenarioConfig& config) {
  require(config.scenario == ScenarioKind::semisupervised,
          "expected semisupervised config");
  return run_common(config, false);
}

ScenarioResult run_noise(const ScenarioConfig& config) {
  require(config.scenario == ScenarioKind::noise, "expected noise config");
  return run_common(config, false);
}

ScenarioResult run_missing(const ScenarioConfig& config) {
  require(config.scenario == ScenarioKind::missing, "expected missing config");
  return run_common(config, false);
}

ScenarioResult run_baseline_gru(const ScenarioConfig& config) {
  return run_common(config, true);
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  return run_common(config, false);
}

Json scenario_config_to_json(const ScenarioConfig& config) {
  Json j;
  j["scenario"] = scenario_kind_name(config.scenario);
  if (config.synthetic) {
    Json s;
    s["n_nodes"] = config.synthetic->n_nodes;
    s["n_steps"] = config.synthetic->n_steps;
    s["freq_indices"] = config.synthetic->freq_indices;
    s["ar_coeff"] = config.synthetic->ar_coeff;
    s["snr_db"] = std::isinf(config.synthetic->snr_db) ? Json("inf")
                                                       : Json(config.synthetic->snr_db);
    s["seed"] = config.synthetic->seed;
    j["dataset"] = Json{{"synthetic", std::move(s)}};
  } else {
    Json d;
    d["signals_csv"] = config.source.signals_csv;
    if (!config.source.adjacency_csv.empty())
      d["adjacency_csv"] = config.source.adjacency_csv;
    if (!config.source.meta_csv.empty()) d["meta_csv"] = config.source.meta_csv;
    d["builder"] = config.source.builder == GraphBuilderKind::raw   ? "raw"
                   : config.source.builder == GraphBuilderKind::knn ? "knn"
                                                                    : "rbf";
    d["knn_k"] = config.source.knn_k;
    d["rbf_window"] = config.source.rbf_window;
    if (!config.source.units.empty()) d["units"] = config.source.units;
    j["dataset"] = std::move(d);
  }
  j["sample_fractions"] = config.sample_fractions;
  j["freq_count"] = config.freq_count;
  if (config.freq_mode) {
    j["freq_mode"] =
        *config.freq_mode == FrequencyMode::smallest ? "smallest" : "dominant";
  }
  j["calibration_snapshots"] = config.calibration_snapshots;
  if (config.corruption) {
    Json c;
    c["kind"] =
        config.corruption->kind == CorruptionKind::noise ? "noise" : "missing";
    c["noise_ratio"] = config.corruption->noise_ratio;
    c["missing_fraction"] = config.corruption->missing_fraction;
    c["seed"] = config.corruption->seed;
    j["corruption"] = std::move(c);
  }
  j["repeats"] = config.repeats;
  j["train"] = train_config_to_json(config.train);
  j["mape_scale"] = config.mape_scale;
  j["mape_offset"] = config.mape_offset;
  j["out_dir"] = config.out_dir;
  j["plot_data"] = config.plot_data;
  return j;
}

ScenarioConfig scenario_config_from_json(const Json& j) {
  ScenarioConfig config;
  const std::string kind = j.at("scenario").get<std::string>();
  if (kind == "supervised") {
    config.scenario = ScenarioKind::supervised;
  } else if (kind == "semisupervised") {
    config.scenario = ScenarioKind::semisupervised;
  } else if (kind == "noise") {
    config.scenario = ScenarioKind::noise;
  } else if (kind == "missing") {
    config.scenario = ScenarioKind::missing;
  } else {
    throw std::invalid_argument("scenario config: unknown scenario " + kind);
  }

  const Json& d = j.at("dataset");
  if (d.contains("synthetic")) {
    const Json& s = d.at("synthetic");
    SyntheticSpec spec;
    if (s.contains("n_nodes")) spec.n_nodes = s.at("n_nodes").get<int>();
    if (s.contains("n_steps")) spec.n_steps = s.at("n_steps").get<int>();
    if (s.contains("freq_indices"))
      spec.freq_indices = s.at("freq_indices").get<IndexList>();
    if (s.contains("ar_coeff")) spec.ar_coeff = s.at("ar_coeff").get<double>();
    if (s.contains("snr_db")) {
      if (s.at("snr_db").is_string()) {
        spec.snr_db = std::numeric_limits<double>::infinity();
      } else {
        spec.snr_db = s.at("snr_db").get<double>();
      }
    }
    if (s.contains("seed")) spec.seed = s.at("seed").get<std::uint64_t>();
    config.synthetic = spec;
  } else {
    config.source.signals_csv = d.at("signals_csv").get<std::string>();
    if (d.contains("adjacency_csv"))
      config.source.adjacency_csv = d.at("adjacency_csv").get<std::string>();
    if (d.contains("meta_csv"))
      config.source.meta_csv = d.at("meta_csv").get<std::string>();
    if (d.contains("builder")) {
      const std::string b = d.at("builder").get<std::string>();
      if (b == "raw") {
        config.source.builder = GraphBuilderKind::raw;
      } else if (b == "knn") {
        config.source.builder = GraphBuilderKind::knn;
      } else if (b == "rbf") {
        config.source.builder = GraphBuilderKind::rbf;
      } else {
        throw std::invalid_argument("scenario config: unknown builder " + b);
      }
    }
    if (d.contains("knn_k")) config.source.knn_k = d.at("knn_k").get<int>();
    if (d.contains("rbf_window"))
      config.source.rbf_window = d.at("rbf_window").get<int>();
    if (d.contains("units")) config.source.units = d.at("units").get<std::string>();
  }

  if (j.contains("sample_fraction")) {
    config.sample_fractions = {j.at("sample_fraction").get<double>()};
  }
  if (j.contains("sample_fractions")) {
    config.sample_fractions = j.at("sample_fractions").get<std::vector<double>>();
  }
  if (j.contains("freq_count")) config.freq_count = j.at("freq_count").get<int>();
  if (j.contains("freq_mode")) {
    const std::string mode = j.at("freq_mode").get<std::string>();
    if (mode == "smallest") {
      config.freq_mode = FrequencyMode::smallest;
    } else if (mode == "dominant") {
      config.freq_mode = FrequencyMode::dominant;
    } else {
      throw std::invalid_argument("scenario config: unknown freq_mode " + mode);
    }
  }
  if (j.contains("calibration_snapshots"))
    config.calibration_snapshots = j.at("calibration_snapshots").get<int>();
  if (j.contains("corruption")) {
    const Json& c = j.at("corruption");
    CorruptionSpec spec;
    const std::string ck = c.at("kind").get<std::string>();
    if (ck == "noise") {
      spec.kind = CorruptionKind::noise;
    } else if (ck == "missing") {
      spec.kind = CorruptionKind::missing;
    } else {
      throw std::invalid_argument("scenario config: unknown corruption kind " + ck);
    }
    if (c.contains("noise_ratio")) spec.noise_ratio = c.at("noise_ratio").get<double>();
    if (c.contains("missing_fraction"))
      spec.missing_fraction = c.at("missing_fraction").get<double>();
    if (c.contains("seed")) spec.seed = c.at("seed").get<std::uint64_t>();
    config.corruption = spec;
  }
  if (j.contains("repeats")) config.repeats = j.at("repeats").get<int>();
  if (j.contains("train")) config.train = train_config_from_json(j.at("train"));
  if (j.contains("horizon")) config.train.horizon = j.at("horizon").get<int>();
  if (j.contains("mape_scale")) config.mape_scale = j.at("mape_scale").get<double>();
  if (j.contains("mape_offset")) config.mape_offset = j.at("mape_offset").get<double>();
  if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("plot_data")) config.plot_data = j.at("plot_data").get<bool>();
  config.validate();
  return config;
}

std::string config_hash(const ScenarioConfig& config) {
  // Output destination and plot emission do not define the experiment.
  Json j = scenario_config_to_json(config);
  j.erase("out_dir");
  j.erase("plot_data");
  const std::string dump = j.dump();
  return to_hex(fnv1a(dump.data(), dump.size()));
}

Json scenario_report_json(const ScenarioResult& result) {
  Json j;
  j["scenario"] = result.scenario;
  j["model_kind"] = result.model_kind;
  j["config_hash"] = result.config_hash_hex;
  Json runs = Json::array();
  for (const ScenarioRun& run : result.runs) {
    Json r;
    r["sample_fraction"] = run.sample_fraction;
    r["repeat"] = run.repeat_index;
    r["m"] = run.m;
    r["k"] = run.k;
    r["sv_min"] = run.sv_min;
    r["ill_conditioned"] = run.ill_conditioned;
    r["flops_per_iteration"] = run.flops;
    r["plan_hash"] = run.plan_hash_hex;
    r["model_hash"] = run.model_hash_hex;
    r["best_epoch"] = run.best_epoch;
    r["best_val_loss"] = run.best_val_loss;
    r["epochs_run"] = run.history.size();
    if (result.scenario == "missing") {
      r["mask_size_min"] = run.mask_size_min;
      r["mask_size_max"] = run.mask_size_max;
    }
    r["metrics"] = metrics_to_json(run.metrics);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  if (!result.aggregates.empty()) {
    Json aggs = Json::array();
    for (const FractionAggregate& a : result.aggregates) {
      Json agg;
      agg["sample_fraction"] = a.sample_fraction;
      agg["repeats"] = a.repeats;
      agg["mae_mean"] = a.mae_mean;
      agg["mae_std"] = a.mae_std;
      agg["rmse_mean"] = a.rmse_mean;
      agg["rmse_std"] = a.rmse_std;
      agg["mape_mean"] = a.mape_mean;
      agg["mape_std"] = a.mape_std;
      aggs.push_back(std::move(agg));
    }
    j["aggregates"] = std::move(aggs);
  }
  return j;
}

void write_scenario_outputs(const ScenarioResult& result, const ScenarioConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  const fs::path out(config.out_dir);

  write_text_file((out / "report.json").string(),
                  scenario_report_json(result).dump(2) + "\n");

  std::ostringstream csv;
  csv << "scenario,model,fraction,repeat,m,k,sv_min,mae,rmse,mape,mae_known,"
         "mae_hidden,flops\n";
  for (const ScenarioRun& run : result.runs) {
    csv << result.scenario << ',' << result.model_kind << ','
        << format_double(run.sample_fraction) << ',' << run.repeat_index << ','
        << run.m << ',' << run.k << ',' << format_double(run.sv_min) << ','
        << format_double(run.metrics.mae) << ',' << format_double(run.metrics.rmse)
        << ',' << format_double(run.metrics.mape) << ',';
    if (std::isfinite(run.metrics.mae_known))
      csv << format_double(run.metrics.mae_known);
    csv << ',';
    if (std::isfinite(run.metrics.mae_hidden))
      csv << format_double(run.metrics.mae_hidden);
    csv << ',' << run.flops << '\n';
  }
  write_text_file((out / "report.csv").string(), csv.str());

  if (!result.aggregates.empty()) {
    std::ostringstream agg;
    agg << "fraction,repeats,mae_mean,mae_std,rmse_mean,rmse_std,mape_mean,mape_std\n";
    for (const FractionAggregate& a : result.aggregates) {
      agg << format_double(a.sample_fraction) << ',' << a.repeats << ','
          << format_double(a.mae_mean) << ',' << format_double(a.mae_std) << ','
          << format_double(a.rmse_mean) << ',' << format_double(a.rmse_std) << ','
          << format_double(a.mape_mean) << ',' << format_double(a.mape_std) << '\n';
    }
    write_text_file((out / "aggregates.csv").string(), agg.str());
  }

  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    write_history_csv(result.runs[i].history,
                      (out / ("history_run" + std::to_string(i) + ".csv")).string());
    if (!result.runs[i].missing_mask.empty()) {
      save_mask_csv(result.runs[i].missing_mask,
                    (out / ("mask_run" + std::to_string(i) + ".csv")).string());
    }
  }

  Json timings = Json::array();
  for (const ScenarioRun& run : result.runs) {
    Json t;
    t["train_seconds"] = run.train_seconds;
    t["test_seconds"] = run.test_seconds;
    timings.push_back(std::move(t));
  }
  write_text_file((out / "timings.json").string(),
                  Json{{"runs", std::move(timings)}}.dump(2) + "\n");

  if (config.plot_data) {
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
      const ScenarioRun& run = result.runs[i];
      auto dump_series = [&](const std::vector<Vector>& rows, const std::string& name) {
        std::ostringstream s;
        s << "t";
        if (!rows.empty()) {
          for (int nidx = 0; nidx < rows[0].size(); ++nidx) s << ",node" << nidx;
        }
        s << '\n';
        for (std::size_t w = 0; w < rows.size(); ++w) {
          s << run.label_indices[w];
          for (int nidx = 0; nidx < rows[w].size(); ++nidx) {
            s << ',' << format_double(rows[w](nidx));
          }
          s << '\n';
        }
        write_text_file((out / (name + "_run" + std::to_string(i) + ".csv")).string(),
                        s.str());
      };
      dump_series(run.predictions, "predictions");
      dump_series(run.truths, "truth");
    }
  }
}

}  // namespace sggru
