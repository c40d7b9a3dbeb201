// Command-line surface for graph construction, spectrum caching, sampling
// plan selection, synthetic data generation, training, evaluation, scenario
// runs and the flops estimate.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "sggru/data.hpp"
#include "sggru/model.hpp"
#include "sggru/pipeline.hpp"
#include "sggru/sampling.hpp"
#include "sggru/scenarios.hpp"
#include "sggru/serialize.hpp"

namespace fs = std::filesystem;
using namespace sggru;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

DatasetSource dataset_source_from_args(const std::string& signals,
                                       const std::string& adjacency,
                                       const std::string& meta,
                                       const std::string& builder, int knn_k,
                                       int rbf_window) {
  DatasetSource source;
  source.signals_csv = signals;
  source.adjacency_csv = adjacency;
  source.meta_csv = meta;
  source.knn_k = knn_k;
  source.rbf_window = rbf_window;
  if (builder == "raw") {
    source.builder = GraphBuilderKind::raw;
  } else if (builder == "knn") {
    source.builder = GraphBuilderKind::knn;
  } else if (builder == "rbf") {
    source.builder = GraphBuilderKind::rbf;
  } else {
    throw std::invalid_argument("unknown builder: " + builder);
  }
  return source;
}

IndexList parse_index_list(const std::string& text) {
  IndexList indices;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    indices.push_back(std::stoi(field));
  }
  return indices;
}

SplitWindows split_dataset_windows(const Matrix& signals, const TrainConfig& config) {
  const auto windows = make_windows(signals, signals, config.tau, config.horizon);
  return split_chronological(windows, config.split_fractions);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint forecasting and interpolation of graph signals"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs globals;
  app.add_option("--config", globals.config_path, "JSON configuration file");
  app.add_option("--out", globals.out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", globals.seed, "seed override");

  // graph build
  auto* graph_cmd = app.add_subcommand("graph", "graph utilities");
  auto* graph_build = graph_cmd->add_subcommand("build", "build an adjacency matrix");
  std::string gb_meta, gb_adjacency, gb_signals, gb_output;
  int gb_k = 10, gb_window = 1000;
  graph_build->add_option("--meta", gb_meta, "station metadata CSV (knn builder)");
  graph_build->add_option("--adjacency", gb_adjacency,
                          "adjacency CSV (raw validate, or binary support for rbf)");
  graph_build->add_option("--signals", gb_signals, "signals CSV (rbf builder)");
  graph_build->add_option("--k", gb_k, "nearest-neighbor count");
  graph_build->add_option("--window", gb_window, "rbf window length");
  graph_build->add_option("--output", gb_output, "output adjacency CSV")->required();

  // spectrum compute
  auto* spectrum_cmd = app.add_subcommand("spectrum", "spectrum utilities");
  auto* spectrum_compute =
      spectrum_cmd->add_subcommand("compute", "eigendecompose a graph Laplacian");
  std::string sc_adjacency, sc_cache;
  spectrum_compute->add_option("--adjacency", sc_adjacency, "adjacency CSV")->required();
  spectrum_compute->add_option("--cache", sc_cache, "spectrum cache file")->required();

  // plan select
  auto* plan_cmd = app.add_subcommand("plan", "sampling plan utilities");
  auto* plan_select = plan_cmd->add_subcommand("select", "greedy E-optimal selection");
  std::string ps_adjacency, ps_cache, ps_signals, ps_freq_mode = "smallest", ps_output;
  double ps_fraction = 0.0;
  int ps_m = 0, ps_k = 0, ps_calibration = 100;
  plan_select->add_option("--adjacency", ps_adjacency, "adjacency CSV")->required();
  plan_select->add_option("--cache", ps_cache, "spectrum cache file");
  plan_select->add_option("--fraction", ps_fraction, "sample fraction M/N");
  plan_select->add_option("--m", ps_m, "sample count M");
  plan_select->add_option("--k", ps_k, "frequency count K (default floor(M/3))");
  plan_select->add_option("--freq-mode", ps_freq_mode, "smallest or dominant");
  plan_select->add_option("--signals", ps_signals, "signals CSV (dominant mode)");
  plan_select->add_option("--calibration", ps_calibration,
                          "calibration snapshot count (dominant mode)");
  plan_select->add_option("--output", ps_output, "output plan JSON")->required();

  // synth generate
  auto* synth_cmd = app.add_subcommand("synth", "synthetic data utilities");
  auto* synth_generate = synth_cmd->add_subcommand("generate", "generate a dataset");
  SyntheticSpec synth_spec;
  std::string sg_freq = "0,1,2";
  synth_generate->add_option("--n", synth_spec.n_nodes, "node count");
  synth_generate->add_option("--t", synth_spec.n_steps, "timestep count");
  synth_generate->add_option("--freq", sg_freq, "band indices, comma separated");
  synth_generate->add_option("--ar", synth_spec.ar_coeff, "AR(1) coefficient");
  synth_generate->add_option("--snr-db", synth_spec.snr_db, "band-to-residual SNR");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string tr_signals, tr_adjacency, tr_meta, tr_builder = "raw", tr_plan,
              tr_model = "sggru";
  int tr_knn_k = 10, tr_rbf_window = 1000;
  train_cmd->add_option("--signals", tr_signals, "signals CSV")->required();
  train_cmd->add_option("--adjacency", tr_adjacency, "adjacency CSV");
  train_cmd->add_option("--meta", tr_meta, "station metadata CSV");
  train_cmd->add_option("--builder", tr_builder, "raw, knn or rbf");
  train_cmd->add_option("--knn-k", tr_knn_k, "nearest-neighbor count");
  train_cmd->add_option("--rbf-window", tr_rbf_window, "rbf window length");
  train_cmd->add_option("--plan", tr_plan, "sampling plan JSON")->required();
  train_cmd->add_option("--model", tr_model, "sggru or baseline_gru");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string ev_signals, ev_adjacency, ev_meta, ev_builder = "raw", ev_plan,
              ev_checkpoint;
  int ev_knn_k = 10, ev_rbf_window = 1000;
  bool ev_plot = false;
  eval_cmd->add_option("--signals", ev_signals, "signals CSV")->required();
  eval_cmd->add_option("--adjacency", ev_adjacency, "adjacency CSV");
  eval_cmd->add_option("--meta", ev_meta, "station metadata CSV");
  eval_cmd->add_option("--builder", ev_builder, "raw, knn or rbf");
  eval_cmd->add_option("--knn-k", ev_knn_k, "nearest-neighbor count");
  eval_cmd->add_option("--rbf-window", ev_rbf_window, "rbf window length");
  eval_cmd->add_option("--plan", ev_plan, "sampling plan JSON")->required();
  eval_cmd->add_option("--checkpoint", ev_checkpoint, "checkpoint JSON")->required();
  eval_cmd->add_flag("--plot-data", ev_plot, "emit per-node prediction CSVs");

  // scenario run
  auto* scenario_cmd = app.add_subcommand("scenario", "scenario runners");
  auto* scenario_run = scenario_cmd->add_subcommand("run", "run a configured scenario");
  bool sr_baseline = false, sr_plot = false;
  scenario_run->add_flag("--baseline", sr_baseline,
                         "run the plain GRU + interpolation baseline");
  scenario_run->add_flag("--plot-data", sr_plot, "emit per-node prediction CSVs");

  // flops
  auto* flops_cmd = app.add_subcommand("flops", "per-iteration cost estimate");
  int fl_n = 0, fl_m = 0, fl_k = 0, fl_tau = 0;
  flops_cmd->add_option("--n", fl_n, "node count")->required();
  flops_cmd->add_option("--m", fl_m, "sample count")->required();
  flops_cmd->add_option("--k", fl_k, "frequency count")->required();
  flops_cmd->add_option("--tau", fl_tau, "window length")->required();

  try {
    app.parse(argc, argv);
    globals.seed_set = seed_opt->count() > 0;

    if (graph_build->parsed()) {
      Graph graph = [&]() {
        if (!gb_meta.empty()) {
          return build_knn_graph(load_meta_csv(gb_meta), gb_k);
        }
        require(!gb_adjacency.empty(), "graph build: need --meta or --adjacency");
        Matrix adjacency = load_matrix_csv(gb_adjacency);
        if (!gb_signals.empty()) {
          const SignalsCsv signals = load_signals_csv(gb_signals);
          const int window =
              std::min<int>(gb_window, static_cast<int>(signals.signals.cols()));
          return build_rbf_adjacency(adjacency, signals.signals, window);
        }
        return Graph::from_adjacency(std::move(adjacency));
      }();
      save_matrix_csv(graph.adjacency(), gb_output);
      std::cout << "wrote " << gb_output << " (" << graph.n_nodes() << " nodes)\n";
      return 0;
    }

    if (spectrum_compute->parsed()) {
      const Graph graph = Graph::from_adjacency(load_matrix_csv(sc_adjacency));
      const Spectrum spectrum =
          load_or_compute_spectrum(build_laplacian(graph), sc_cache);
      std::cout << "wrote " << sc_cache << " (lambda_max "
                << spectrum.eigenvalues()(spectrum.n_nodes() - 1) << ")\n";
      return 0;
    }

    if (plan_select->parsed()) {
      const Graph graph = Graph::from_adjacency(load_matrix_csv(ps_adjacency));
      const Matrix laplacian = build_laplacian(graph);
      const Spectrum spectrum = ps_cache.empty()
                                    ? Spectrum::from_laplacian(laplacian)
                                    : load_or_compute_spectrum(laplacian, ps_cache);
      const int n = graph.n_nodes();
      int m = ps_m;
      if (m == 0) {
        require(ps_fraction > 0.0 && ps_fraction <= 1.0,
                "plan select: need --m or --fraction in (0, 1]");
        m = std::clamp(static_cast<int>(std::lround(ps_fraction * n)), 1, n);
      }
      IndexList sample_nodes;
      if (m == n) {
        sample_nodes.resize(n);
        std::iota(sample_nodes.begin(), sample_nodes.end(), 0);
      } else {
        IndexList selection_freqs(m);
        std::iota(selection_freqs.begin(), selection_freqs.end(), 0);
        sample_nodes = select_sampling_set_greedy(spectrum, selection_freqs, m);
      }
      const int k = ps_k > 0 ? ps_k : default_band_size(m);
      IndexList freqs;
      if (ps_freq_mode == "smallest") {
        freqs = choose_frequency_set(FrequencyMode::smallest, k, spectrum);
      } else if (ps_freq_mode == "dominant") {
        require(!ps_signals.empty(), "plan select: dominant mode needs --signals");
        const SignalsCsv signals = load_signals_csv(ps_signals);
        require(signals.signals.allFinite(),
                "plan select: calibration signals contain missing values");
        const int calib =
            std::min<int>(ps_calibration, static_cast<int>(signals.signals.cols()));
        const Matrix calibration = signals.signals.leftCols(calib);
        freqs = choose_frequency_set(FrequencyMode::dominant, k, spectrum, &calibration);
      } else {
        throw std::invalid_argument("plan select: unknown freq-mode " + ps_freq_mode);
      }
      const SamplingPlan plan = build_plan(sample_nodes, freqs, spectrum);
      save_plan(plan, ps_output);
      std::cout << "wrote " << ps_output << " (M=" << plan.m() << " K=" << plan.k()
                << " sv_min=" << plan.sv_min << ")\n";
      if (plan.ill_conditioned) {
        std::cout << "warning: interpolator condition number "
                  << plan.condition_number << " exceeds 1e8\n";
      }
      return 0;
    }

    if (synth_generate->parsed()) {
      require(!globals.out_dir.empty(), "synth generate: --out directory required");
      synth_spec.freq_indices = parse_index_list(sg_freq);
      if (globals.seed_set) synth_spec.seed = globals.seed;
      const TimeSeriesDataset dataset = generate_synthetic(synth_spec);
      fs::create_directories(globals.out_dir);
      const fs::path out(globals.out_dir);
      save_signals_csv(dataset.signals, (out / "signals.csv").string());
      save_matrix_csv(dataset.graph.adjacency(), (out / "adjacency.csv").string());
      std::cout << "wrote " << (out / "signals.csv").string() << " and adjacency.csv ("
                << dataset.signals.rows() << " nodes x " << dataset.signals.cols()
                << " steps)\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      require(!globals.out_dir.empty(), "train: --out directory required");
      TrainConfig config;
      if (!globals.config_path.empty()) {
        config = train_config_from_json(load_json_file(globals.config_path));
      }
      if (globals.seed_set) config.seed = globals.seed;

      const LoadedDataset loaded = load_dataset(dataset_source_from_args(
          tr_signals, tr_adjacency, tr_meta, tr_builder, tr_knn_k, tr_rbf_window));
      const SamplingPlan plan = load_plan(tr_plan);
      require(plan.n_nodes == loaded.dataset.graph.n_nodes(),
              "train: plan node count does not match dataset");
      const SplitWindows split = split_dataset_windows(loaded.dataset.signals, config);

      fs::create_directories(globals.out_dir);
      const fs::path out(globals.out_dir);
      const int n = loaded.dataset.graph.n_nodes();
      if (tr_model == "sggru") {
        SgGruModel model = init_model(n, plan.m(), plan.k(), config.tau,
                                      config.horizon, plan, config.seed);
        const TrainResult trained = train(model, split.train, split.val, config);
        write_text_file(
            (out / "checkpoint.json").string(),
            checkpoint_to_json(model, trained.scaler, &trained.optimizer).dump(2) +
                "\n");
        write_history_csv(trained.history, (out / "history.csv").string());
        std::cout << "best val loss " << trained.best_val_loss << " at epoch "
                  << trained.best_epoch << "\n";
      } else if (tr_model == "baseline_gru") {
        BaselineGruModel model =
            init_baseline(n, plan.m(), config.tau, config.horizon, plan, config.seed);
        const TrainResult trained = train(model, split.train, split.val, config);
        write_text_file(
            (out / "checkpoint.json").string(),
            checkpoint_to_json(model, trained.scaler, &trained.optimizer).dump(2) +
                "\n");
        write_history_csv(trained.history, (out / "history.csv").string());
        std::cout << "best val loss " << trained.best_val_loss << " at epoch "
                  << trained.best_epoch << "\n";
      } else {
        throw std::invalid_argument("train: unknown model " + tr_model);
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      require(!globals.out_dir.empty(), "evaluate: --out directory required");
      TrainConfig config;
      if (!globals.config_path.empty()) {
        config = train_config_from_json(load_json_file(globals.config_path));
      }
      const LoadedDataset loaded = load_dataset(dataset_source_from_args(
          ev_signals, ev_adjacency, ev_meta, ev_builder, ev_knn_k, ev_rbf_window));
      const SamplingPlan plan = load_plan(ev_plan);
      const Checkpoint ckpt = checkpoint_from_json(load_json_file(ev_checkpoint), plan);
      // The window geometry is dictated by the trained model, not the config.
      std::visit(
          [&](const auto& model) {
            config.tau = model.dims.tau;
            config.horizon = model.dims.horizon;
          },
          ckpt.model);
      const SplitWindows split = split_dataset_windows(loaded.dataset.signals, config);

      fs::create_directories(globals.out_dir);
      const fs::path out(globals.out_dir);
      EvalOptions opts;
      opts.scenario_tag = "evaluate";
      std::vector<Vector> predictions;
      if (ev_plot) opts.predictions_out = &predictions;

      const MetricsReport report = std::visit(
          [&](const auto& model) { return evaluate(model, split.test, ckpt.scaler, opts); },
          ckpt.model);
      write_text_file((out / "report.json").string(),
                      metrics_to_json(report).dump(2) + "\n");
      write_text_file((out / "report.csv").string(),
                      metrics_csv_header() + "\n" + metrics_csv_row(report) + "\n");
      if (ev_plot) {
        std::ostringstream pred_csv, truth_csv;
        pred_csv << "t";
        truth_csv << "t";
        const int n = loaded.dataset.graph.n_nodes();
        for (int j = 0; j < n; ++j) {
          pred_csv << ",node" << j;
          truth_csv << ",node" << j;
        }
        pred_csv << '\n';
        truth_csv << '\n';
        for (std::size_t w = 0; w < split.test.size(); ++w) {
          pred_csv << split.test[w].label_index;
          truth_csv << split.test[w].label_index;
          for (int j = 0; j < n; ++j) {
            pred_csv << ',' << predictions[w](j);
            truth_csv << ',' << split.test[w].label(j);
          }
          pred_csv << '\n';
          truth_csv << '\n';
        }
        write_text_file((out / "predictions.csv").string(), pred_csv.str());
        write_text_file((out / "truth.csv").string(), truth_csv.str());
      }
      std::cout << "mae " << report.mae << " rmse " << report.rmse << " mape "
                << report.mape << "\n";
      return 0;
    }

    if (scenario_run->parsed()) {
      require(!globals.config_path.empty(), "scenario run: --config required");
      ScenarioConfig config =
          scenario_config_from_json(load_json_file(globals.config_path));
      if (globals.seed_set) config.train.seed = globals.seed;
      if (!globals.out_dir.empty()) config.out_dir = globals.out_dir;
      if (sr_plot) config.plot_data = true;
      const ScenarioResult result =
          sr_baseline ? run_baseline_gru(config) : run_scenario(config);
      write_scenario_outputs(result, config);
      for (const ScenarioRun& run : result.runs) {
        std::cout << result.scenario << " f=" << run.sample_fraction << " rep="
                  << run.repeat_index << " mae=" << run.metrics.mae
                  << " rmse=" << run.metrics.rmse << " mape=" << run.metrics.mape
                  << "\n";
      }
      std::cout << "wrote " << config.out_dir << "/report.json\n";
      return 0;
    }

    if (flops_cmd->parsed()) {
      std::cout << estimate_flops(fl_n, fl_m, fl_k, fl_tau) << "\n";
      return 0;
    }

    std::cerr << "no subcommand executed\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
}
