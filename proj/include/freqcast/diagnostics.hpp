#pragma once

// Predictability diagnostics: Hurst exponent, autocorrelation, random walks.

#include "freqcast/params.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace freqcast::diagnostics {

/// Classic rescaled range of a segment: range of the cumulative
/// mean-adjusted sum over the population standard deviation.
double rescaled_range(const Vector& segment);

/// How a segment's R/S is formed inside hurst().
///  random_walk: the series is a level path. R is the range of the levels in
///               the segment, S the sample std of its increments.
///  change:      the series holds increments; classic rescaled_range.
enum class HurstKind { random_walk, change };

struct HurstReport {
    double H = 0.0;
    double intercept = 0.0;  // log C
    std::vector<Index> window_sizes;
    std::vector<double> rs_values;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Window sizes 8, 16, ... up to len/2; R/S averaged over disjoint segments;
/// slope of log(R/S) against log(n).
HurstReport hurst(const Vector& x, HurstKind kind = HurstKind::random_walk);

struct AcfReport {
    std::vector<Index> lags;
    Vector rho;  // raw; may exceed 1 slightly at large lags

    /// rho clamped to [-1, 1] for presentation.
    [[nodiscard]] nlohmann::json to_json() const;
};

/// rho(k) = [1/(n-k) sum (x_t - m)(x_{t+k} - m)] / [1/n sum (x_t - m)^2]
AcfReport acf(const Vector& x, Index max_lag);

/// x_t = s_1 + ... + s_t + drift * t for t = 1..steps, with s = +-1 (or
/// standard normal when gaussian).
Vector simulate_random_walk(Index steps, double drift, std::uint64_t seed, bool gaussian = false);

/// Keeps spectrum bins 0..cutoff and transforms back to the same length.
/// Series too short to have that many bins are returned unchanged.
Vector low_pass_series(const Vector& x, Index cutoff);

struct NamedSeries {
    std::string name;
    Vector values;
};

struct RankEntry {
    std::string name;
    double H = 0.0;
    Index length = 0;
    [[nodiscard]] double deviation() const { return std::abs(H - 0.5); }
};

/// Descending |H - 0.5|; ties go to the longer series.
std::vector<RankEntry> rank_entries(std::vector<RankEntry> entries);

std::vector<RankEntry> rank_by_hurst_deviation(const std::vector<NamedSeries>& series,
                                               std::optional<Index> low_pass_cutoff = std::nullopt,
                                               HurstKind kind = HurstKind::random_walk);

}  // namespace freqcast::diagnostics
