#pragma once

// Time-domain linear forecasters and their compositions with FITS.

#include "freqcast/fits.hpp"
#include "freqcast/model.hpp"

#include <memory>
#include <utility>

namespace freqcast::linear {

inline constexpr Index kDefaultKernel = 25;

/// trend = moving_average(x, kernel), seasonal = x - trend, per column.
std::pair<Matrix, Matrix> decompose(const Matrix& x, Index kernel = kDefaultKernel);

/// y = W^T x, no bias.
class LinearModel final : public Forecaster {
public:
    LinearModel(Index seq_len, Index pred_len, std::uint64_t seed = 0);

    [[nodiscard]] std::string kind() const override { return "linear"; }
    [[nodiscard]] Index seq_len() const override { return seq_len_; }
    [[nodiscard]] Index pred_len() const override { return pred_len_; }
    [[nodiscard]] bool has_backcast() const override { return false; }
    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    [[nodiscard]] nlohmann::json config_json() const override;

private:
    Index seq_len_, pred_len_;
    std::uint64_t seed_;
};

/// y = W^T (x - x_last) + x_last.
class NLinear final : public Forecaster {
public:
    NLinear(Index seq_len, Index pred_len, std::uint64_t seed = 0);

    [[nodiscard]] std::string kind() const override { return "nlinear"; }
    [[nodiscard]] Index seq_len() const override { return seq_len_; }
    [[nodiscard]] Index pred_len() const override { return pred_len_; }
    [[nodiscard]] bool has_backcast() const override { return false; }
    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    [[nodiscard]] nlohmann::json config_json() const override;

    void set_weights(const Matrix& w);

private:
    Index seq_len_, pred_len_;
    std::uint64_t seed_;
};

/// Trend and seasonal parts through separate linear maps, summed.
///
/// `out_len` is normally pred_len; the DLinear+FITS hybrid builds one with
/// out_len = seq_len + pred_len so the first seq_len rows form a backcast.
class DLinear final : public Forecaster {
public:
    DLinear(Index seq_len, Index pred_len, Index kernel = kDefaultKernel, bool with_backcast = false);

    [[nodiscard]] std::string kind() const override { return "dlinear"; }
    [[nodiscard]] Index seq_len() const override { return seq_len_; }
    [[nodiscard]] Index pred_len() const override { return pred_len_; }
    [[nodiscard]] bool has_backcast() const override { return with_backcast_; }
    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    [[nodiscard]] nlohmann::json config_json() const override;

    [[nodiscard]] Index kernel() const { return kernel_; }
    /// seq_len x output_len each.
    [[nodiscard]] Matrix trend_weights() const;
    [[nodiscard]] Matrix seasonal_weights() const;
    void set_weights(const Matrix& trend, const Matrix& seasonal);

private:
    Index seq_len_, pred_len_, kernel_;
    bool with_backcast_;
    Matrix trend_op_;  // moving-average operator, seq_len x seq_len
};

/// DLinear (with backcast) followed by FITS on the look-back residual; the
/// output is the sum of both over seq_len + pred_len rows.
class DLinearPlusFits final : public Forecaster {
public:
    DLinearPlusFits(fits::FitsConfig fits_cfg, Index kernel = kDefaultKernel);

    [[nodiscard]] std::string kind() const override { return "dlinear_fits"; }
    [[nodiscard]] Index seq_len() const override { return fits_.seq_len(); }
    [[nodiscard]] Index pred_len() const override { return fits_.pred_len(); }
    [[nodiscard]] bool has_backcast() const override { return true; }
    [[nodiscard]] std::size_t group_count() const override { return fits_.group_count(); }
    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    void set_training(bool training) override;
    void after_step() override { fits_.after_step(); }
    [[nodiscard]] nlohmann::json config_json() const override;
    std::vector<ParameterStore*> stores() override { return {&dlinear_.params(), &fits_.params()}; }

    DLinear& dlinear() { return dlinear_; }
    fits::FitsModel& fits() { return fits_; }
    [[nodiscard]] const DLinear& dlinear() const { return dlinear_; }
    [[nodiscard]] const fits::FitsModel& fits() const { return fits_; }

private:
    DLinear dlinear_;
    fits::FitsModel fits_;
};

/// FITS first; DLinear consumes the backcast rows of its output and emits the
/// pred_len forecast.
class FitsPlusDLinear final : public Forecaster {
public:
    FitsPlusDLinear(fits::FitsConfig fits_cfg, Index kernel = kDefaultKernel);

    [[nodiscard]] std::string kind() const override { return "fits_dlinear"; }
    [[nodiscard]] Index seq_len() const override { return fits_.seq_len(); }
    [[nodiscard]] Index pred_len() const override { return fits_.pred_len(); }
    [[nodiscard]] bool has_backcast() const override { return false; }
    [[nodiscard]] std::size_t group_count() const override { return fits_.group_count(); }
    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    void set_training(bool training) override;
    void after_step() override { fits_.after_step(); }
    [[nodiscard]] nlohmann::json config_json() const override;
    std::vector<ParameterStore*> stores() override { return {&fits_.params(), &dlinear_.params()}; }

    DLinear& dlinear() { return dlinear_; }
    fits::FitsModel& fits() { return fits_; }
    [[nodiscard]] const DLinear& dlinear() const { return dlinear_; }
    [[nodiscard]] const fits::FitsModel& fits() const { return fits_; }

private:
    fits::FitsModel fits_;
    DLinear dlinear_;
};

}  // namespace freqcast::linear
