#pragma once

// JSON checkpoints:
//   {"format": "freqcast-checkpoint", "version": 1, "model_kind": "...",
//    "config": {...}, "parameters": [{"store": 0, "name": "...", "complex": bool,
//    "rows": r, "cols": c, "values": [...]}]}
// Values are row-major; complex entries are stored as re, im pairs.

#include "freqcast/model.hpp"

#include <memory>
#include <string>

namespace freqcast {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_json(const Forecaster& model);
std::unique_ptr<Forecaster> model_from_checkpoint(const nlohmann::json& j);

void save_checkpoint(const Forecaster& model, const std::string& path);
std::unique_ptr<Forecaster> load_checkpoint(const std::string& path);

}  // namespace freqcast
