#include "freqcast/diagnostics.hpp"

#include "freqcast/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace freqcast::diagnostics {

double rescaled_range(const Vector& segment) {
    if (segment.size() < 2) throw std::invalid_argument("rescaled_range: segment too short");
    const double mean = segment.mean();
    const double sd = std::sqrt((segment.array() - mean).square().mean());
    if (sd == 0.0) throw std::domain_error("zero variance segment");
    double z = 0.0, lo = 0.0, hi = 0.0;
    for (Index i = 0; i < segment.size(); ++i) {
        z += segment(i) - mean;
        if (i == 0) lo = hi = z;
        lo = std::min(lo, z);
        hi = std::max(hi, z);
    }
    return (hi - lo) / sd;
}

namespace {

// 0 marks an unusable (flat) segment.
double walk_rs(const Vector& levels) {
    const Index n = levels.size();
    const double range = levels.maxCoeff() - levels.minCoeff();
    const Vector inc = levels.tail(n - 1) - levels.head(n - 1);
    const double m = inc.mean();
    const double var = (inc.array() - m).square().sum() / double(inc.size() - 1);
    if (range == 0.0 || var == 0.0) return 0.0;
    return range / std::sqrt(var);
}

double change_rs(const Vector& seg) {
    const double mean = seg.mean();
    if ((seg.array() - mean).square().sum() == 0.0) return 0.0;
    return rescaled_range(seg);
}

}  // namespace

nlohmann::json HurstReport::to_json() const {
    return {{"H", H}, {"intercept", intercept}, {"window_sizes", window_sizes}, {"rs_values", rs_values}};
}

HurstReport hurst(const Vector& x, HurstKind kind) {
    if (x.size() < 100) throw std::invalid_argument("hurst: series must have at least 100 samples");
    if (!x.allFinite()) throw std::invalid_argument("hurst: non-finite sample");
    HurstReport rep;
    for (Index n = 8; n <= x.size() / 2; n *= 2) {
        double sum = 0.0;
        Index used = 0;
        for (Index start = 0; start + n <= x.size(); start += n) {
            const Vector seg = x.segment(start, n);
            const double rs = kind == HurstKind::random_walk ? walk_rs(seg) : change_rs(seg);
            if (rs > 0.0) {
                sum += rs;
                ++used;
            }
        }
        if (used == 0) continue;
        rep.window_sizes.push_back(n);
        rep.rs_values.push_back(sum / double(used));
    }
    const auto m = static_cast<Index>(rep.window_sizes.size());
    if (m < 4) throw std::domain_error("hurst: fewer than 4 usable window sizes");
    Matrix a(m, 2);
    Vector b(m);
    for (Index i = 0; i < m; ++i) {
        a(i, 0) = std::log(double(rep.window_sizes[static_cast<std::size_t>(i)]));
        a(i, 1) = 1.0;
        b(i) = std::log(rep.rs_values[static_cast<std::size_t>(i)]);
    }
    const Vector coef = a.colPivHouseholderQr().solve(b);
    rep.H = coef(0);
    rep.intercept = coef(1);
    return rep;
}

nlohmann::json AcfReport::to_json() const {
    std::vector<double> clamped(static_cast<std::size_t>(rho.size()));
    for (Index k = 0; k < rho.size(); ++k) clamped[static_cast<std::size_t>(k)] = std::clamp(rho(k), -1.0, 1.0);
    return {{"lags", lags}, {"rho", clamped}};
}

AcfReport acf(const Vector& x, Index max_lag) {
    const Index n = x.size();
    if (max_lag < 0 || max_lag >= n) throw std::invalid_argument("acf: max_lag must be in [0, len)");
    const Vector c = x.array() - x.mean();
    const double var = c.squaredNorm() / double(n);
    if (var == 0.0) throw std::domain_error("zero variance");
    AcfReport rep;
    rep.rho.resize(max_lag + 1);
    for (Index k = 0; k <= max_lag; ++k) {
        rep.lags.push_back(k);
        const double cov = c.head(n - k).dot(c.tail(n - k)) / double(n - k);
        rep.rho(k) = cov / var;
    }
    rep.rho(0) = 1.0;
    return rep;
}

Vector simulate_random_walk(Index steps, double drift, std::uint64_t seed, bool gaussian) {
    if (steps < 0) throw std::invalid_argument("simulate_random_walk: negative step count");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    Vector x(steps);
    double level = 0.0;
    for (Index t = 0; t < steps; ++t) {
        level += gaussian ? normal(rng) : (coin(rng) ? 1.0 : -1.0);
        x(t) = level + drift * double(t + 1);
    }
    return x;
}

Vector low_pass_series(const Vector& x, Index cutoff) {
    if (cutoff < 0) throw std::invalid_argument("low_pass_series: negative cutoff");
    const auto spec = spectral::rfft<double>(x);
    if (cutoff >= spec.bins.size() - 1) return x;
    return spectral::irfft<double>(spectral::low_pass(spec, cutoff), x.size());
}

std::vector<RankEntry> rank_entries(std::vector<RankEntry> entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.deviation() != b.deviation()) return a.deviation() > b.deviation();
        return a.length > b.length;
    });
    return entries;
}

std::vector<RankEntry> rank_by_hurst_deviation(const std::vector<NamedSeries>& series,
                                               std::optional<Index> low_pass_cutoff, HurstKind kind) {
    std::vector<RankEntry> entries;
    entries.reserve(series.size());
    for (const auto& s : series) {
        const Vector v = low_pass_cutoff ? low_pass_series(s.values, *low_pass_cutoff) : s.values;
        entries.push_back({s.name, hurst(v, kind).H, s.values.size()});
    }
    return rank_entries(std::move(entries));
}

}  // namespace freqcast::diagnostics
