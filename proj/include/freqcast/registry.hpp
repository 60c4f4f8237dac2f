#pragma once

// Model construction by name and the per-dataset benchmark presets.

#include "freqcast/data.hpp"
#include "freqcast/fits.hpp"
#include "freqcast/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace freqcast {

/// Kinds make_model understands. "arima" is not a Forecaster and is handled
/// by the benchmark runner directly.
const std::vector<std::string>& model_kinds();

/// Rebuilds a model from its kind and config_json().
std::unique_ptr<Forecaster> make_model(const std::string& kind, const nlohmann::json& config);

/// Convenience: a model of `kind` sized by a FITS configuration (the FITS part
/// of hybrids uses it verbatim; other kinds take seq_len, pred_len and seed).
std::unique_ptr<Forecaster> make_model(const std::string& kind, const fits::FitsConfig& cfg, Index kernel = 25);

struct DatasetPreset {
    std::string name;
    std::string file;  // expected CSV file name
    Index seq_len = 720;
    Index base_period = 24;
    Index harmonic_order = 6;
    fits::ChannelMode channel_mode = fits::ChannelMode::shared;
    data::SplitSpec split;
    std::vector<Index> horizons{96, 192, 336, 720};
    std::string target = "OT";
    double sentinel = -9999.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

const std::vector<DatasetPreset>& dataset_presets();
/// Throws with the list of known names when `name` is unknown.
const DatasetPreset& find_preset(const std::string& name);

}  // namespace freqcast
