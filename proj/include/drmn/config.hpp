#pragma once

#include <filesystem>
#include <string>

#include "drmn/eval.hpp"
#include "drmn/model.hpp"
#include "drmn/training.hpp"
#include "json.hpp"

namespace drmn {

/// One reproducible run: dataset, output directory and every knob.
struct RunConfig {
  std::string data;
  std::string out;
  TrainConfig train;
  EnsembleConfig ensemble;
};

// Readers accept partial documents (missing keys keep defaults) and reject
// unknown keys and wrongly typed values with a config error.
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EnsembleConfig& c);
EnsembleConfig ensemble_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& file);
/// Writes the fully resolved document (defaults filled in).
void save_run_config(const RunConfig& c, const std::filesystem::path& file);

/// DRMN_SEED, when set, replaces the configured seed. Returns true if applied.
bool apply_seed_override(TrainConfig& c);

}  // namespace drmn
