#pragma once

// End-to-end runs: load, clean, split, standardize, window, train, evaluate.
// Shared by the command-line tool and the acceptance checks.

#include "freqcast/classical.hpp"
#include "freqcast/data.hpp"
#include "freqcast/fits.hpp"
#include "freqcast/registry.hpp"
#include "freqcast/train.hpp"

#include <memory>
#include <optional>
#include <string>

namespace freqcast::experiment {

/// True for kinds with a FITS component.
bool uses_fits(const std::string& model);

struct RunSpec {
    std::string dataset;      // label for the record
    std::string model = "fits";  // a registry kind or "arima"
    data::Mode mode = data::Mode::M;
    fits::FitsConfig fits;    // seq/pred lengths, cutoff, channel layout, variant
    Index kernel = 25;
    data::SplitSpec split;
    double sentinel = -9999.0;
    train::TrainConfig train;
    /// Evaluate on at most this many evenly spaced test windows; 0 = all.
    Index subsample = 0;
    classical::AutoArimaOptions arima;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// A spec carrying every hyperparameter of `preset` for one horizon.
RunSpec spec_from_preset(const DatasetPreset& preset, const std::string& model, Index horizon);

struct Prepared {
    data::Standardized standardized;
    std::shared_ptr<const Matrix> values;  // standardized, all rows
    data::WindowSet train, val, test;
};

/// Cleans, splits, standardizes with train statistics and builds windows.
/// Validation and test windows borrow look-back from the preceding split.
Prepared prepare(const data::SeriesFrame& frame, const RunSpec& spec);

struct RunRecord {
    std::string dataset, model, mode;
    Index seq_len = 0, pred_len = 0, base_period = 0, harmonic_order = 0, cutoff = 0;
    std::uint64_t seed = 0;
    Index param_count = 0;
    train::Metrics metrics;
    double wall_time_s = 0.0;
    Index test_windows = 0;
    int epochs = 0;
    nlohmann::json extra;  // spec and, for arima, the chosen orders

    [[nodiscard]] nlohmann::json to_json() const;
};

struct RunResult {
    RunRecord record;
    std::unique_ptr<Forecaster> model;  // null for arima
    train::History history;
};

/// Builds the model the spec describes (not arima).
std::unique_ptr<Forecaster> build_model(const RunSpec& spec, Index target_channels);

/// Trains (unless the model has no parameters) and evaluates on the test split.
RunResult run(const data::SeriesFrame& frame, const RunSpec& spec, std::ostream* log = nullptr);

/// auto_arima refitted on every (subsampled) test window and target channel.
train::Metrics evaluate_arima(const Prepared& prepared, const RunSpec& spec, nlohmann::json* orders = nullptr);

}  // namespace freqcast::experiment
