#include "sggru/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sggru {

namespace {

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::uint64_t hash_update_u64(std::uint64_t state, std::uint64_t value) {
  return fnv1a(&value, sizeof(value), state);
}

std::uint64_t hash_update_matrix(std::uint64_t state, const Matrix& m) {
  state = hash_update_u64(state, static_cast<std::uint64_t>(m.rows()));
  state = hash_update_u64(state, static_cast<std::uint64_t>(m.cols()));
  return fnv1a(m.data(), sizeof(double) * m.size(), state);
}

std::uint64_t hash_update_indices(std::uint64_t state, const IndexList& v) {
  state = hash_update_u64(state, v.size());
  for (int idx : v) state = hash_update_u64(state, static_cast<std::uint64_t>(idx));
  return state;
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string activation_to_string(Activation a) {
  return a == Activation::sigmoid ? "sigmoid" : "tanh";
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t state) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    state ^= p[i];
    state *= 1099511628211ull;
  }
  return state;
}

std::string to_hex(std::uint64_t value) {
  char buffer[20];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

std::string matrix_content_hash(const Matrix& matrix) {
  return to_hex(hash_update_matrix(14695981039346656037ull, matrix));
}

Json matrix_to_json(const Matrix& matrix) {
  Json j;
  j["rows"] = matrix.rows();
  j["cols"] = matrix.cols();
  Json data = Json::array();
  for (int i = 0; i < matrix.rows(); ++i) {
    for (int c = 0; c < matrix.cols(); ++c) data.push_back(matrix(i, c));
  }
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const Json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  require(static_cast<Eigen::Index>(data.size()) == rows * cols,
          "matrix json: payload size mismatch");
  Matrix m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[idx++].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& vector) {
  Json data = Json::array();
  for (int i = 0; i < vector.size(); ++i) data.push_back(vector(i));
  return data;
}

Vector vector_from_json(const Json& j) {
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Json plan_to_json(const SamplingPlan& plan) {
  Json j;
  j["n_nodes"] = plan.n_nodes;
  j["sample_nodes"] = plan.sample_nodes;
  j["freq_indices"] = plan.freq_indices;
  j["sv_min"] = plan.sv_min;
  j["condition_number"] = plan.condition_number;
  j["ill_conditioned"] = plan.ill_conditioned;
  j["sampling_matrix"] = matrix_to_json(plan.sampling_matrix);
  j["interpolator"] = matrix_to_json(plan.interpolator);
  j["spectral_interpolator"] = matrix_to_json(plan.spectral_interpolator);
  j["band_basis"] = matrix_to_json(plan.band_basis);
  return j;
}

SamplingPlan plan_from_json(const Json& j) {
  SamplingPlan plan;
  plan.n_nodes = j.at("n_nodes").get<int>();
  plan.sample_nodes = j.at("sample_nodes").get<IndexList>();
  plan.freq_indices = j.at("freq_indices").get<IndexList>();
  plan.sv_min = j.at("sv_min").get<double>();
  plan.condition_number = j.at("condition_number").get<double>();
  plan.ill_conditioned = j.at("ill_conditioned").get<bool>();
  plan.sampling_matrix = matrix_from_json(j.at("sampling_matrix"));
  plan.interpolator = matrix_from_json(j.at("interpolator"));
  plan.spectral_interpolator = matrix_from_json(j.at("spectral_interpolator"));
  plan.band_basis = matrix_from_json(j.at("band_basis"));
  return plan;
}

std::string plan_hash(const SamplingPlan& plan) {
  std::uint64_t state = 14695981039346656037ull;
  state = hash_update_u64(state, static_cast<std::uint64_t>(plan.n_nodes));
  state = hash_update_indices(state, plan.sample_nodes);
  state = hash_update_indices(state, plan.freq_indices);
  state = hash_update_matrix(state, plan.sampling_matrix);
  state = hash_update_matrix(state, plan.interpolator);
  state = hash_update_matrix(state, plan.spectral_interpolator);
  state = hash_update_matrix(state, plan.band_basis);
  return to_hex(state);
}

void save_plan(const SamplingPlan& plan, const std::string& path) {
  write_text_file(path, plan_to_json(plan).dump(2) + "\n");
}

SamplingPlan load_plan(const std::string& path) {
  return plan_from_json(load_json_file(path));
}

void save_spectrum_cache(const Spectrum& spectrum, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  out << "# laplacian_hash " << matrix_content_hash(spectrum.laplacian()) << '\n';
  for (int i = 0; i < spectrum.n_nodes(); ++i) {
    if (i) out << ',';
    out << format_double(spectrum.eigenvalues()(i));
  }
  out << '\n';
  const Matrix& u = spectrum.eigenvectors();
  for (int r = 0; r < u.rows(); ++r) {
    for (int c = 0; c < u.cols(); ++c) {
      if (c) out << ',';
      out << format_double(u(r, c));
    }
    out << '\n';
  }
}

Spectrum load_or_compute_spectrum(const Matrix& laplacian,
                                  const std::string& cache_path) {
  const std::string expected = matrix_content_hash(laplacian);
  std::ifstream in(cache_path);
  if (in.good()) {
    std::string header;
    std::getline(in, header);
    const std::string prefix = "# laplacian_hash ";
    if (header.rfind(prefix, 0) == 0 && header.substr(prefix.size()) == expected) {
      const int n = static_cast<int>(laplacian.rows());
      try {
        std::string line;
        require(static_cast<bool>(std::getline(in, line)), "truncated cache");
        std::stringstream ss(line);
        Vector values(n);
        std::string field;
        for (int i = 0; i < n; ++i) {
          require(static_cast<bool>(std::getline(ss, field, ',')), "truncated cache");
          values(i) = std::stod(field);
        }
        Matrix vectors(n, n);
        for (int r = 0; r < n; ++r) {
          require(static_cast<bool>(std::getline(in, line)), "truncated cache");
          std::stringstream row(line);
          for (int c = 0; c < n; ++c) {
            require(static_cast<bool>(std::getline(row, field, ',')), "truncated cache");
            vectors(r, c) = std::stod(field);
          }
        }
        return Spectrum::from_parts(std::move(values), std::move(vectors), laplacian);
      } catch (const std::exception&) {
        // fall through to recompute
      }
    }
  }
  Spectrum spectrum = Spectrum::from_laplacian(laplacian);
  save_spectrum_cache(spectrum, cache_path);
  return spectrum;
}

Json train_config_to_json(const TrainConfig& config) {
  Json j;
  j["tau"] = config.tau;
  j["horizon"] = config.horizon;
  j["batch_size"] = config.batch_size;
  j["lr0"] = config.lr0;
  j["decay_factor"] = config.decay_factor;
  j["decay_interval"] = config.decay_interval;
  j["max_epochs"] = config.max_epochs;
  j["patience"] = config.patience;
  j["seed"] = config.seed;
  j["split_fractions"] = config.split_fractions;
  j["loss_mode"] =
      config.loss_mode == LossMode::supervised ? "supervised" : "semisupervised";
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig config;
  if (j.contains("tau")) config.tau = j.at("tau").get<int>();
  if (j.contains("horizon")) config.horizon = j.at("horizon").get<int>();
  if (j.contains("batch_size")) config.batch_size = j.at("batch_size").get<int>();
  if (j.contains("lr0")) config.lr0 = j.at("lr0").get<double>();
  if (j.contains("decay_factor")) config.decay_factor = j.at("decay_factor").get<double>();
  if (j.contains("decay_interval"))
    config.decay_interval = j.at("decay_interval").get<int>();
  if (j.contains("max_epochs")) config.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("patience")) config.patience = j.at("patience").get<int>();
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("split_fractions")) {
    const auto& f = j.at("split_fractions");
    require(f.size() == 3, "train config: split_fractions needs 3 entries");
    for (int i = 0; i < 3; ++i) config.split_fractions[i] = f[i].get<double>();
  }
  if (j.contains("loss_mode")) {
    const std::string mode = j.at("loss_mode").get<std::string>();
    if (mode == "supervised") {
      config.loss_mode = LossMode::supervised;
    } else if (mode == "semisupervised") {
      config.loss_mode = LossMode::semisupervised;
    } else {
      throw std::invalid_argument("train config: unknown loss_mode " + mode);
    }
  }
  config.validate();
  return config;
}

namespace {

Json dims_to_json(const SgGruDims& dims) {
  Json j;
  j["n"] = dims.n;
  j["m"] = dims.m;
  j["k"] = dims.k;
  j["tau"] = dims.tau;
  j["horizon"] = dims.horizon;
  return j;
}

SgGruDims dims_from_json(const Json& j) {
  SgGruDims dims;
  dims.n = j.at("n").get<int>();
  dims.m = j.at("m").get<int>();
  dims.k = j.at("k").get<int>();
  dims.tau = j.at("tau").get<int>();
  dims.horizon = j.at("horizon").get<int>();
  return dims;
}

Json gru_to_json(const GruParams& p) {
  Json j;
  j["w_q"] = matrix_to_json(p.w_q);
  j["v_q"] = matrix_to_json(p.v_q);
  j["w_r"] = matrix_to_json(p.w_r);
  j["v_r"] = matrix_to_json(p.v_r);
  j["w_c"] = matrix_to_json(p.w_c);
  j["v_c"] = matrix_to_json(p.v_c);
  j["b_q"] = vector_to_json(p.b_q);
  j["b_r"] = vector_to_json(p.b_r);
  j["b_c"] = vector_to_json(p.b_c);
  return j;
}

void gru_from_json(const Json& j, GruParams& p) {
  p.w_q = matrix_from_json(j.at("w_q"));
  p.v_q = matrix_from_json(j.at("v_q"));
  p.w_r = matrix_from_json(j.at("w_r"));
  p.v_r = matrix_from_json(j.at("v_r"));
  p.w_c = matrix_from_json(j.at("w_c"));
  p.v_c = matrix_from_json(j.at("v_c"));
  p.b_q = vector_from_json(j.at("b_q"));
  p.b_r = vector_from_json(j.at("b_r"));
  p.b_c = vector_from_json(j.at("b_c"));
}

Json optimizer_to_json(const OptimizerState& opt) {
  Json j;
  j["lr0"] = opt.lr0;
  j["smoothing"] = opt.smoothing;
  j["epsilon"] = opt.epsilon;
  j["epoch"] = opt.epoch;
  j["decay_factor"] = opt.decay_factor;
  j["decay_interval"] = opt.decay_interval;
  Json acc = Json::array();
  for (Eigen::Index i = 0; i < opt.accumulator.size(); ++i) {
    acc.push_back(opt.accumulator(i));
  }
  j["accumulator"] = std::move(acc);
  return j;
}

OptimizerState optimizer_from_json(const Json& j) {
  const auto& acc = j.at("accumulator");
  OptimizerState opt = OptimizerState::for_size(acc.size(), j.at("lr0").get<double>());
  opt.smoothing = j.at("smoothing").get<double>();
  opt.epsilon = j.at("epsilon").get<double>();
  opt.epoch = j.at("epoch").get<int>();
  opt.decay_factor = j.at("decay_factor").get<double>();
  opt.decay_interval = j.at("decay_interval").get<int>();
  for (std::size_t i = 0; i < acc.size(); ++i) {
    opt.accumulator(i) = acc[i].get<double>();
  }
  return opt;
}

Json checkpoint_common(const std::string& kind, const SgGruDims& dims,
                       std::uint64_t seed, Activation act, const std::string& plan,
                       const Scaler& scaler, const OptimizerState* optimizer) {
  Json j;
  j["format_version"] = 1;
  j["kind"] = kind;
  j["dims"] = dims_to_json(dims);
  j["seed"] = seed;
  j["candidate_activation"] = activation_to_string(act);
  j["plan_hash"] = plan;
  j["scaler"] = scaler.scale;
  if (optimizer) j["optimizer"] = optimizer_to_json(*optimizer);
  return j;
}

}  // namespace

Json checkpoint_to_json(const SgGruModel& model, const Scaler& scaler,
                        const OptimizerState* optimizer) {
  Json j = checkpoint_common("sggru", model.dims, model.seed,
                             model.gru.candidate_activation, plan_hash(model.plan),
                             scaler, optimizer);
  Json params;
  params["gru"] = gru_to_json(model.gru);
  params["sgru"] = gru_to_json(model.sgru);
  Json fusion;
  fusion["weight"] = matrix_to_json(model.fusion.weight);
  fusion["bias"] = vector_to_json(model.fusion.bias);
  params["fusion"] = std::move(fusion);
  j["params"] = std::move(params);
  return j;
}

Json checkpoint_to_json(const BaselineGruModel& model, const Scaler& scaler,
                        const OptimizerState* optimizer) {
  Json j = checkpoint_common("baseline_gru", model.dims, model.seed,
                             model.gru.candidate_activation, plan_hash(model.plan),
                             scaler, optimizer);
  Json params;
  params["gru"] = gru_to_json(model.gru);
  j["params"] = std::move(params);
  return j;
}

Checkpoint checkpoint_from_json(const Json& j, const SamplingPlan& plan) {
  require(j.at("format_version").get<int>() == 1, "checkpoint: unknown format version");
  require(j.at("plan_hash").get<std::string>() == plan_hash(plan),
          "checkpoint: sampling plan does not match the one used in training");
  const SgGruDims dims = dims_from_json(j.at("dims"));
  const auto seed = j.at("seed").get<std::uint64_t>();
  const Activation act =
      activation_from_string(j.at("candidate_activation").get<std::string>());

  Checkpoint ckpt;
  ckpt.scaler.scale = j.at("scaler").get<double>();
  if (j.contains("optimizer")) ckpt.optimizer = optimizer_from_json(j.at("optimizer"));
  const std::string kind = j.at("kind").get<std::string>();
  const Json& params = j.at("params");
  if (kind == "sggru") {
    SgGruModel model =
        init_model(dims.n, dims.m, dims.k, dims.tau, dims.horizon, plan, seed, act);
    gru_from_json(params.at("gru"), model.gru);
    gru_from_json(params.at("sgru"), model.sgru);
    model.fusion.weight = matrix_from_json(params.at("fusion").at("weight"));
    model.fusion.bias = vector_from_json(params.at("fusion").at("bias"));
    model.gru.validate();
    model.sgru.validate();
    ckpt.model = std::move(model);
  } else if (kind == "baseline_gru") {
    BaselineGruModel model =
        init_baseline(dims.n, dims.m, dims.tau, dims.horizon, plan, seed, act);
    gru_from_json(params.at("gru"), model.gru);
    model.gru.validate();
    ckpt.model = std::move(model);
  } else {
    throw std::invalid_argument("checkpoint: unknown model kind " + kind);
  }
  return ckpt;
}

namespace {

std::uint64_t hash_model_common(std::uint64_t state, const SgGruDims& dims,
                                const Vector& params) {
  state = hash_update_u64(state, static_cast<std::uint64_t>(dims.n));
  state = hash_update_u64(state, static_cast<std::uint64_t>(dims.m));
  state = hash_update_u64(state, static_cast<std::uint64_t>(dims.k));
  state = hash_update_u64(state, static_cast<std::uint64_t>(dims.tau));
  state = hash_update_u64(state, static_cast<std::uint64_t>(dims.horizon));
  return fnv1a(params.data(), sizeof(double) * params.size(), state);
}

}  // namespace

std::string model_hash(const SgGruModel& model) {
  std::uint64_t state = fnv1a("sggru", 5);
  return to_hex(hash_model_common(state, model.dims, param_vector(model)));
}

std::string model_hash(const BaselineGruModel& model) {
  std::uint64_t state = fnv1a("baseline", 8);
  return to_hex(hash_model_common(state, model.dims, param_vector(model)));
}

Json metrics_to_json(const MetricsReport& report) {
  Json j;
  j["scenario"] = report.scenario;
  j["mae"] = report.mae;
  j["rmse"] = report.rmse;
  j["mape"] = report.mape;
  j["n_test"] = report.n_test;
  if (std::isfinite(report.mae_known)) j["mae_known"] = report.mae_known;
  if (std::isfinite(report.mae_hidden)) j["mae_hidden"] = report.mae_hidden;
  j["per_node_mae"] = vector_to_json(report.per_node_mae);
  return j;
}

std::string metrics_csv_header() {
  return "scenario,n_test,mae,rmse,mape,mae_known,mae_hidden";
}

std::string metrics_csv_row(const MetricsReport& report) {
  std::ostringstream out;
  out << report.scenario << ',' << report.n_test << ',' << format_double(report.mae)
      << ',' << format_double(report.rmse) << ',' << format_double(report.mape) << ',';
  if (std::isfinite(report.mae_known)) out << format_double(report.mae_known);
  out << ',';
  if (std::isfinite(report.mae_hidden)) out << format_double(report.mae_hidden);
  return out.str();
}

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << format_double(r.train_loss) << ','
        << format_double(r.val_loss) << ',' << format_double(r.lr) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  require(out.good(), "cannot write file: " + path);
  out << content;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

}  // namespace sggru
