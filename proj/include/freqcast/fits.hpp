#pragma once

// Frequency interpolation forecaster: per-window normalization, truncated real
// spectrum, complex linear interpolation to a longer spectrum, inverse
// transform, denormalization. Deep and bypass variants share the same frame.

#include "freqcast/model.hpp"
#include "freqcast/spectral.hpp"

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace freqcast::fits {

enum class ChannelMode { shared, individual };

enum class Variant { plain, deep_modrelu, deep_crelu, deep_after_upscaler, real_deep, bypass };

std::string to_string(ChannelMode m);
std::string to_string(Variant v);
ChannelMode channel_mode_from_string(const std::string& s);
Variant variant_from_string(const std::string& s);

/// Floor applied to per-window standard deviations.
inline constexpr double kStdFloor = 1e-5;

struct FitsConfig {
    Index seq_len = 360;
    Index pred_len = 96;
    Index base_period = 24;
    Index harmonic_order = 6;
    /// Explicit cutoff bin; replaces the harmonic formula when set.
    std::optional<Index> cutoff_override;
    ChannelMode channel_mode = ChannelMode::shared;
    Index channels = 1;  // number of layer groups in individual mode
    Variant variant = Variant::plain;
    Index depth = 0;      // hidden layers for deep variants
    Index hidden = 128;
    double dropout = 0.0;
    bool complex_bias = true;
    bool zero_init = false;
    std::uint64_t seed = 0;

    /// floor(harmonic_order * seq_len / base_period), unless overridden.
    [[nodiscard]] Index cutoff_bin() const;
    [[nodiscard]] Index output_len() const { return seq_len + pred_len; }
    [[nodiscard]] double eta() const { return double(output_len()) / double(seq_len); }
    [[nodiscard]] Index in_bins() const { return cutoff_bin() + 1; }
    /// floor(in_bins * eta), capped at the number of real bins of output_len.
    [[nodiscard]] Index out_bins() const;
    void validate() const;

    [[nodiscard]] nlohmann::json to_json() const;
    static FitsConfig from_json(const nlohmann::json& j);
};

/// Per-column mean and (floored, population) standard deviation.
struct InstanceStats {
    Vector mean;
    Vector std;
    /// True where the raw std was below the floor.
    std::vector<bool> floored;
};

/// Column-wise zero-mean / unit-variance scaling.
std::pair<Matrix, InstanceStats> normalize(const Matrix& x);
Matrix denormalize(const Matrix& y, const InstanceStats& stats);

/// Gradient of the composition denormalize(f(normalize(x)), stats(x)) with
/// respect to x, given the upstream gradient at the normalized input and the
/// gradient at the final (denormalized) output.
Matrix normalize_backward(const Matrix& x_normalized, const Matrix& y_normalized, const InstanceStats& stats,
                          const Matrix& grad_x_normalized, const Matrix& grad_y);

using ComplexVec = spectral::ComplexVector<double>;
using ComplexMat = Eigen::MatrixXcd;

/// out_j = sum_i x_i W_ij + b_j
ComplexVec complex_linear(const ComplexVec& x, const ComplexMat& w, const ComplexVec& b);

/// Phase-preserving magnitude shift with a dead zone where |z| + b < 0.
std::complex<double> mod_relu(std::complex<double> z, double b);

/// ReLU applied to the real and imaginary parts separately.
std::complex<double> c_relu(std::complex<double> z);

/// Zeroes each bin (both parts) with probability p and rescales survivors by
/// 1/(1-p) while training; identity otherwise.
ComplexVec complex_dropout(const ComplexVec& z, double p, bool training, std::mt19937_64& rng);

/// (1 - beta) * fits_out + beta * linear_out
Matrix bypass_mix(const Matrix& fits_out, const Matrix& linear_out, double beta);

class FitsModel final : public Forecaster {
public:
    explicit FitsModel(FitsConfig cfg);

    [[nodiscard]] std::string kind() const override { return "fits"; }
    [[nodiscard]] Index seq_len() const override { return cfg_.seq_len; }
    [[nodiscard]] Index pred_len() const override { return cfg_.pred_len; }
    [[nodiscard]] bool has_backcast() const override { return true; }
    [[nodiscard]] std::size_t group_count() const override { return groups_.size(); }

    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    void after_step() override;
    [[nodiscard]] nlohmann::json config_json() const override;

    [[nodiscard]] const FitsConfig& config() const { return cfg_; }

    /// The frequency-map weights of a group (in_bins x out_bins for plain).
    [[nodiscard]] ComplexMat frequency_weights(std::size_t group = 0) const;
    void set_frequency_weights(const ComplexMat& w, std::size_t group = 0);

    /// Closed-form trainable scalar count of the configuration.
    [[nodiscard]] static Index expected_param_count(const FitsConfig& cfg);

private:
    struct Layer {
        std::size_t weight = 0;
        std::size_t bias = 0;
        bool has_bias = false;
    };
    struct Group {
        std::vector<Layer> spectral_layers;   // complex maps (or real ones for real_deep)
        std::vector<std::size_t> modrelu_bias;
        std::vector<Layer> time_layers;       // post-upscaler MLP
        std::size_t bypass_weight = 0;
        std::size_t beta = 0;
    };

    void build();
    void init_weights();

    SplitComplex spectral_forward(const SplitComplex& in, const Group& g, ForwardCache* cache) const;
    SplitComplex spectral_backward(const ForwardCache& cache, std::size_t& cursor, const SplitComplex& grad,
                                   Group& g);

    FitsConfig cfg_;
    spectral::RealDftBasis<double> analysis_;
    spectral::RealDftBasis<double> synthesis_;
    std::vector<Group> groups_;
    mutable std::mt19937_64 rng_;
};

/// Batched forward of a configured model on one multichannel window
/// (seq_len x channels); returns output_len x channels.
Matrix fits_forward(const FitsModel& model, const Matrix& window);

/// Reconstruction task: strided downsample by `factor`, then upsample through
/// a model configured with seq_len = N / factor and output_len = N.
Matrix fits_reconstruct(const FitsModel& model, const Matrix& window, Index factor);

/// Downsampled input matching fits_reconstruct's preprocessing.
Matrix downsample(const Matrix& window, Index factor);

}  // namespace freqcast::fits
