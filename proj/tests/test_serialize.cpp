#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "sggru/serialize.hpp"
#include "test_support.hpp"

using namespace sggru;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "sggru_serialize_tests";
  fs::create_directories(dir);
  return dir;
}

SamplingPlan sample_plan(std::uint64_t seed) {
  const Spectrum s = Spectrum::from_graph(random_connected_graph(9, seed));
  const IndexList freqs{0, 1, 2};
  const IndexList nodes = select_sampling_set_greedy(s, freqs, 5);
  return build_plan(nodes, freqs, s);
}

}  // namespace

TEST_CASE("matrix json payload is row-major and bit exact") {
  Rng rng(5);
  const Matrix m = testsup::random_symmetric(4, rng);
  const Json j = matrix_to_json(m);
  CHECK(j.at("rows") == 4);
  CHECK(j.at("data").size() == 16);
  CHECK(j.at("data")[1].get<double>() == m(0, 1));  // row-major order
  const Matrix back = matrix_from_json(j);
  CHECK(std::memcmp(m.data(), back.data(), sizeof(double) * m.size()) == 0);
}

TEST_CASE("plan json round trip preserves every matrix bit") {
  const SamplingPlan plan = sample_plan(3);
  const SamplingPlan back = plan_from_json(plan_to_json(plan));
  CHECK(back.sample_nodes == plan.sample_nodes);
  CHECK(back.freq_indices == plan.freq_indices);
  CHECK(back.sv_min == plan.sv_min);
  CHECK(std::memcmp(back.interpolator.data(), plan.interpolator.data(),
                    sizeof(double) * plan.interpolator.size()) == 0);
  CHECK(std::memcmp(back.band_basis.data(), plan.band_basis.data(),
                    sizeof(double) * plan.band_basis.size()) == 0);
  CHECK(plan_hash(back) == plan_hash(plan));

  SUBCASE("file round trip") {
    const std::string path = (scratch_dir() / "plan.json").string();
    save_plan(plan, path);
    const SamplingPlan loaded = load_plan(path);
    CHECK(plan_hash(loaded) == plan_hash(plan));
  }
}

TEST_CASE("spectrum cache") {
  const Graph g = random_connected_graph(7, 9);
  const Matrix laplacian = build_laplacian(g);
  const std::string path = (scratch_dir() / "spectrum.csv").string();
  fs::remove(path);

  const Spectrum first = load_or_compute_spectrum(laplacian, path);
  CHECK(fs::exists(path));
  const Spectrum second = load_or_compute_spectrum(laplacian, path);
  CHECK(std::memcmp(first.eigenvectors().data(), second.eigenvectors().data(),
                    sizeof(double) * 49) == 0);

  SUBCASE("stale hash triggers recompute") {
    std::ofstream out(path);
    out << "# laplacian_hash deadbeef\n";
    out.close();
    const Spectrum third = load_or_compute_spectrum(laplacian, path);
    CHECK(std::memcmp(first.eigenvectors().data(), third.eigenvectors().data(),
                      sizeof(double) * 49) == 0);
    // Cache was rewritten with the right hash.
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.find(matrix_content_hash(laplacian)) != std::string::npos);
  }
  SUBCASE("a different laplacian does not reuse the cache") {
    const Graph g2 = random_connected_graph(7, 10);
    const Matrix l2 = build_laplacian(g2);
    const Spectrum other = load_or_compute_spectrum(l2, path);
    const Matrix rebuilt = other.eigenvectors() *
                           other.eigenvalues().asDiagonal() *
                           other.eigenvectors().transpose();
    CHECK((rebuilt - l2).cwiseAbs().maxCoeff() <= 1e-8 * l2.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("train config json round trip") {
  TrainConfig config;
  config.tau = 7;
  config.lr0 = 5e-3;
  config.seed = 99;
  config.loss_mode = LossMode::semisupervised;
  const TrainConfig back = train_config_from_json(train_config_to_json(config));
  CHECK(back.tau == 7);
  CHECK(back.lr0 == 5e-3);
  CHECK(back.seed == 99);
  CHECK(back.loss_mode == LossMode::semisupervised);
  CHECK(back.batch_size == 40);  // untouched default

  SUBCASE("defaults survive an empty object") {
    const TrainConfig d = train_config_from_json(Json::object());
    CHECK(d.tau == 10);
    CHECK(d.batch_size == 40);
    CHECK(d.lr0 == 1e-4);
    CHECK(d.patience == 5);
  }
  SUBCASE("invalid values are rejected") {
    Json j = train_config_to_json(config);
    j["patience"] = 0;
    CHECK_THROWS_AS(train_config_from_json(j), std::invalid_argument);
  }
}

TEST_CASE("checkpoint round trip") {
  const SamplingPlan plan = sample_plan(13);
  SgGruModel model = init_model(9, 5, 3, 4, 1, plan, 55);
  const Scaler scaler{12.5};
  OptimizerState opt = OptimizerState::for_size(param_count(model), 2e-3);
  opt.epoch = 17;
  opt.accumulator.setConstant(0.25);

  const Json j = checkpoint_to_json(model, scaler, &opt);
  const Checkpoint ckpt = checkpoint_from_json(j, plan);
  REQUIRE(std::holds_alternative<SgGruModel>(ckpt.model));
  const SgGruModel& back = std::get<SgGruModel>(ckpt.model);
  CHECK(ckpt.scaler.scale == 12.5);
  const Vector pa = param_vector(model), pb = param_vector(back);
  CHECK(std::memcmp(pa.data(), pb.data(), sizeof(double) * pa.size()) == 0);
  CHECK(model_hash(back) == model_hash(model));

  REQUIRE(ckpt.optimizer.has_value());
  CHECK(ckpt.optimizer->lr0 == 2e-3);
  CHECK(ckpt.optimizer->epoch == 17);
  CHECK(ckpt.optimizer->accumulator.size() == param_count(model));
  CHECK(ckpt.optimizer->accumulator(0) == 0.25);

  // Matrices travel row-major with explicit dimensions.
  CHECK(j.at("params").at("gru").at("w_q").at("rows") == 5);
  CHECK(j.at("params").at("fusion").at("weight").at("cols") == 18);

  SUBCASE("a mismatched plan is refused") {
    const SamplingPlan other = sample_plan(14);
    CHECK_THROWS_AS(checkpoint_from_json(j, other), std::invalid_argument);
  }
  SUBCASE("baseline checkpoints carry their kind") {
    BaselineGruModel baseline = init_baseline(9, 5, 4, 1, plan, 56);
    const Json bj = checkpoint_to_json(baseline, scaler);
    const Checkpoint bc = checkpoint_from_json(bj, plan);
    CHECK(std::holds_alternative<BaselineGruModel>(bc.model));
  }
}

TEST_CASE("metrics json and csv") {
  MetricsReport report;
  report.scenario = "supervised";
  report.mae = 1.25;
  report.rmse = 2.5;
  report.mape = 10.0;
  report.n_test = 42;
  report.per_node_mae = Vector::Constant(3, 1.25);

  const Json j = metrics_to_json(report);
  CHECK(j.at("mae") == 1.25);
  CHECK_FALSE(j.contains("mae_known"));  // NaN fields omitted

  report.mae_known = 1.0;
  report.mae_hidden = 1.5;
  const Json j2 = metrics_to_json(report);
  CHECK(j2.at("mae_hidden") == 1.5);

  const std::string row = metrics_csv_row(report);
  CHECK(row.find("supervised,42,1.25,2.5,10,1,1.5") == 0);
}

TEST_CASE("history csv format") {
  const std::vector<EpochRecord> history{{1, 0.5, 0.6, 1e-4}, {2, 0.4, 0.55, 1e-4}};
  const std::string path = (scratch_dir() / "history.csv").string();
  write_history_csv(history, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_loss,lr");
  std::getline(in, line);
  CHECK(line.find("1,0.5,") == 0);
}
