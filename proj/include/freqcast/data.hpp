#pragma once

// CSV ingestion, cleaning, chronological splits, standardization, sliding
// windows and synthetic series.

#include "freqcast/params.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace freqcast::data {

struct SeriesFrame {
    std::string name;
    std::vector<std::string> timestamps;  // first CSV column, kept verbatim
    std::vector<std::string> channel_names;
    Matrix values;  // rows = time, cols = channels
    std::string target = "OT";

    [[nodiscard]] Index length() const { return values.rows(); }
    [[nodiscard]] Index channels() const { return values.cols(); }
    [[nodiscard]] Index target_index() const;
    [[nodiscard]] Index channel_index(const std::string& name) const;
    /// Rows [begin, end) as a new frame.
    [[nodiscard]] SeriesFrame slice(Index begin, Index end) const;
};

/// Header row, first column a timestamp or index, the rest numeric. An empty
/// `target_column` selects the last column.
SeriesFrame load_csv(const std::string& path, const std::string& target_column = "");
SeriesFrame parse_csv(const std::string& text, const std::string& name, const std::string& target_column = "");

/// Shortest round-trip decimal formatting; load_csv(save_csv(f)) == f.
void save_csv(const SeriesFrame& frame, const std::string& path);
std::string to_csv(const SeriesFrame& frame);

/// Replaces sentinel values by linear interpolation between the neighbouring
/// valid samples of the same channel; leading/trailing runs take the nearest
/// valid value.
SeriesFrame clean_sentinels(const SeriesFrame& frame, double sentinel = -9999.0);

enum class SplitScheme { standard_70_10_20, ett_60_20_20, ett_calendar, custom };

struct SplitSpec {
    SplitScheme scheme = SplitScheme::standard_70_10_20;
    std::array<double, 3> ratios{0.7, 0.1, 0.2};  // used by custom
    Index samples_per_day = 24;                   // used by ett_calendar

    static SplitSpec standard() { return {}; }
    static SplitSpec ett() { return {SplitScheme::ett_60_20_20, {0.6, 0.2, 0.2}, 24}; }
    static SplitSpec ett_calendar(Index samples_per_day) {
        return {SplitScheme::ett_calendar, {0.6, 0.2, 0.2}, samples_per_day};
    }
    static SplitSpec custom(double train, double val, double test) {
        return {SplitScheme::custom, {train, val, test}, 24};
    }
};

/// Boundaries of three contiguous, disjoint, covering slices.
struct SplitBounds {
    Index train_end = 0;
    Index val_end = 0;
    Index total = 0;

    [[nodiscard]] Index begin(int part) const { return part == 0 ? 0 : part == 1 ? train_end : val_end; }
    [[nodiscard]] Index end(int part) const { return part == 0 ? train_end : part == 1 ? val_end : total; }
};

/// train = floor(r_train T), test = floor(r_test T), val = the rest (ratio
/// schemes). The calendar scheme takes 12/4/4 months of 30 days.
SplitBounds split_bounds(Index total, const SplitSpec& spec);

struct Splits {
    SeriesFrame train, val, test;
    SplitBounds bounds;
};
Splits split(const SeriesFrame& frame, const SplitSpec& spec);

/// Per-channel affine scaling fitted on one frame.
struct Scaler {
    Vector mean;
    Vector std;  // population, floored at 1e-8

    static Scaler fit(const Matrix& values);
    [[nodiscard]] Matrix transform(const Matrix& values) const;
    [[nodiscard]] Matrix inverse(const Matrix& values) const;
    [[nodiscard]] SeriesFrame transform(const SeriesFrame& frame) const;
    [[nodiscard]] SeriesFrame inverse(const SeriesFrame& frame) const;
};

struct Standardized {
    Splits splits;
    Scaler scaler;
};
/// Statistics from the train split only, applied to all three.
Standardized standardize(const Splits& splits);

/// S: target channel in and out. MS: every channel in, target out. M: all/all.
enum class Mode { S, MS, M };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// Stride-1 sliding windows over a shared series, computed on access.
///
/// Window i reads inputs at rows [start + i, start + i + seq_len) and targets
/// at the following pred_len rows. `input_channels` / `target_channels` are
/// column indices of the underlying matrix.
class WindowSet {
public:
    WindowSet(std::shared_ptr<const Matrix> values, Index start, Index count, Index seq_len, Index pred_len,
              Mode mode, Index target_channel);

    [[nodiscard]] Index size() const { return count_; }
    [[nodiscard]] Index seq_len() const { return seq_len_; }
    [[nodiscard]] Index pred_len() const { return pred_len_; }
    [[nodiscard]] Mode mode() const { return mode_; }
    [[nodiscard]] Index start() const { return start_; }
    [[nodiscard]] const std::vector<Index>& input_channels() const { return inputs_; }
    [[nodiscard]] const std::vector<Index>& target_channels() const { return targets_; }
    [[nodiscard]] const Matrix& values() const { return *values_; }

    /// seq_len x input channels
    [[nodiscard]] Matrix input(Index i) const;
    /// pred_len x target channels
    [[nodiscard]] Matrix target(Index i) const;
    /// (seq_len + pred_len) x input channels; look-back followed by horizon.
    [[nodiscard]] Matrix full(Index i) const;

private:
    std::shared_ptr<const Matrix> values_;
    Index start_, count_, seq_len_, pred_len_;
    Mode mode_;
    std::vector<Index> inputs_, targets_;
};

/// Windows over the whole frame: count = T - seq_len - pred_len + 1.
WindowSet make_windows(const SeriesFrame& frame, Index seq_len, Index pred_len, Mode mode);

/// Windows whose forecast targets start inside [begin, end) of `values`. With
/// `borrow_context` the look-back may reach up to seq_len rows before
/// `begin`; otherwise windows stay inside the range.
WindowSet make_windows(std::shared_ptr<const Matrix> values, Index begin, Index end, Index seq_len, Index pred_len,
                       Mode mode, Index target_channel, bool borrow_context = true);

/// Sum of components described by a JSON document:
///   {"length": N, "seed": s, "name": "...",
///    "components": [{"kind": "sine", "period": 60, "amplitude": 1, "phase": 0,
///                    "harmonics": [1, 0.5, ...]},
///                   {"kind": "drift", "slope": 0.15, "intercept": 0},
///                   {"kind": "noise", "mean": 15, "variance": 25},
///                   {"kind": "random_walk", "step_std": 1},
///                   {"kind": "constant", "value": 3}]}
/// or {"channels": [{"name": "...", "components": [...]}, ...]} for several
/// channels. Deterministic per seed.
SeriesFrame synth_generate(const nlohmann::json& spec);

}  // namespace freqcast::data
