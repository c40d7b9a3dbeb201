#pragma once

#include <json.hpp>

#include <string>
#include <variant>

#include "sggru/data.hpp"
#include "sggru/model.hpp"
#include "sggru/pipeline.hpp"
#include "sggru/sampling.hpp"
#include "sggru/spectral.hpp"

namespace sggru {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(const void* data, std::size_t bytes,
                    std::uint64_t state = 14695981039346656037ull);
std::string to_hex(std::uint64_t value);

/// Content hash over dimensions plus raw entry bytes.
std::string matrix_content_hash(const Matrix& matrix);

Json matrix_to_json(const Matrix& matrix);  // row-major flat payload
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& vector);
Vector vector_from_json(const Json& j);

Json plan_to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(const Json& j);
std::string plan_hash(const SamplingPlan& plan);
void save_plan(const SamplingPlan& plan, const std::string& path);
SamplingPlan load_plan(const std::string& path);

/// Spectrum cache keyed by a content hash of the Laplacian; a stale or
/// unreadable cache is recomputed and rewritten.
void save_spectrum_cache(const Spectrum& spectrum, const std::string& path);
Spectrum load_or_compute_spectrum(const Matrix& laplacian, const std::string& cache_path);

Json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const Json& j);

struct Checkpoint {
  std::variant<SgGruModel, BaselineGruModel> model;
  Scaler scaler;
  std::optional<OptimizerState> optimizer;
};

/// Versioned container: parameter matrices as row-major payloads, dims,
/// candidate activation, RNG seed, the plan content hash, the input scaler
/// and (when given) the optimizer state.
Json checkpoint_to_json(const SgGruModel& model, const Scaler& scaler,
                        const OptimizerState* optimizer = nullptr);
Json checkpoint_to_json(const BaselineGruModel& model, const Scaler& scaler,
                        const OptimizerState* optimizer = nullptr);
/// Rebuilds the model around `plan`; refuses a plan whose content hash does
/// not match the one recorded at save time.
Checkpoint checkpoint_from_json(const Json& j, const SamplingPlan& plan);

std::string model_hash(const SgGruModel& model);
std::string model_hash(const BaselineGruModel& model);

Json metrics_to_json(const MetricsReport& report);
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
Json load_json_file(const std::string& path);

}  // namespace sggru
