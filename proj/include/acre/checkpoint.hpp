#pragma once

#include <string>

#include <json.hpp>

#include "acre/trainer.hpp"

namespace acre {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_json(const TrainerState& st);

// Writes to a temp file then renames, so a crash never leaves a torn file.
void save_checkpoint(const TrainerState& st, const std::string& path);

// Rebuilds the full state from the checkpoint's embedded config.
TrainerState load_checkpoint(const std::string& path);

// Resume for training: the new config must match the checkpoint echo except
// for the budget and output paths.
TrainerState resume_checkpoint(const RunConfig& new_cfg, const std::string& path);

}  // namespace acre
