#include "freqcast/linear_models.hpp"

#include "freqcast/spectral.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace freqcast::linear {

namespace {

void check_window(const Matrix& x, Index seq_len, const char* who) {
    if (x.rows() != seq_len)
        throw std::invalid_argument(std::string(who) + ": expected windows of length " + std::to_string(seq_len) +
                                    ", got " + std::to_string(x.rows()));
}

void fill_uniform(Parameter& p, double bound, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index i = 0; i < p.value.size(); ++i) p.value(i) = u(rng);
}

}  // namespace

std::pair<Matrix, Matrix> decompose(const Matrix& x, Index kernel) {
    Matrix trend(x.rows(), x.cols());
    for (Index c = 0; c < x.cols(); ++c) trend.col(c) = spectral::moving_average<double>(x.col(c), kernel);
    Matrix seasonal = x - trend;
    return {std::move(trend), std::move(seasonal)};
}

// Linear ---------------------------------------------------------------------

LinearModel::LinearModel(Index seq_len, Index pred_len, std::uint64_t seed)
    : seq_len_(seq_len), pred_len_(pred_len), seed_(seed) {
    if (seq_len < 1 || pred_len < 1) throw std::invalid_argument("linear: lengths must be positive");
    params_.add_real("weight", seq_len, pred_len);
    fill_uniform(params_[0], 1.0 / std::sqrt(double(seq_len)), seed);
}

Matrix LinearModel::forward(const Matrix& x, std::size_t, ForwardCache* cache) const {
    check_window(x, seq_len_, "linear");
    if (cache) {
        cache->clear();
        cache->put(x);
    }
    return real_matrix(params_[0]).transpose() * x;
}

Matrix LinearModel::backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t) {
    add_real_grad(params_[0], cache.at(0) * grad_out.transpose());
    return real_matrix(params_[0]) * grad_out;
}

nlohmann::json LinearModel::config_json() const {
    return {{"seq_len", seq_len_}, {"pred_len", pred_len_}, {"seed", seed_}};
}

// NLinear --------------------------------------------------------------------

NLinear::NLinear(Index seq_len, Index pred_len, std::uint64_t seed)
    : seq_len_(seq_len), pred_len_(pred_len), seed_(seed) {
    if (seq_len < 1 || pred_len < 1) throw std::invalid_argument("nlinear: lengths must be positive");
    params_.add_real("weight", seq_len, pred_len);
    fill_uniform(params_[0], 1.0 / std::sqrt(double(seq_len)), seed);
}

Matrix NLinear::forward(const Matrix& x, std::size_t, ForwardCache* cache) const {
    check_window(x, seq_len_, "nlinear");
    const Eigen::RowVectorXd last = x.row(seq_len_ - 1);
    Matrix shifted = x.rowwise() - last;
    Matrix y = real_matrix(params_[0]).transpose() * shifted;
    y.rowwise() += last;
    if (cache) {
        cache->clear();
        cache->put(std::move(shifted));
    }
    return y;
}

Matrix NLinear::backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t) {
    add_real_grad(params_[0], cache.at(0) * grad_out.transpose());
    Matrix g = real_matrix(params_[0]) * grad_out;
    // x_last enters both through the shift and the additive term.
    g.row(seq_len_ - 1) += grad_out.colwise().sum() - g.colwise().sum();
    return g;
}

nlohmann::json NLinear::config_json() const {
    return {{"seq_len", seq_len_}, {"pred_len", pred_len_}, {"seed", seed_}};
}

void NLinear::set_weights(const Matrix& w) { set_real_matrix(params_[0], w); }

// DLinear --------------------------------------------------------------------

DLinear::DLinear(Index seq_len, Index pred_len, Index kernel, bool with_backcast)
    : seq_len_(seq_len), pred_len_(pred_len), kernel_(kernel), with_backcast_(with_backcast) {
    if (seq_len < 1 || pred_len < 1) throw std::invalid_argument("dlinear: lengths must be positive");
    trend_op_ = spectral::moving_average_matrix<double>(seq_len, kernel);
    const Index out = output_len();
    params_.add_real("trend.weight", seq_len, out);
    params_.add_real("seasonal.weight", seq_len, out);
    for (auto& p : params_) p.value.setConstant(1.0 / double(seq_len));
}

Matrix DLinear::forward(const Matrix& x, std::size_t, ForwardCache* cache) const {
    check_window(x, seq_len_, "dlinear");
    Matrix trend = trend_op_ * x;
    Matrix seasonal = x - trend;
    Matrix y = real_matrix(params_[0]).transpose() * trend;
    y.noalias() += real_matrix(params_[1]).transpose() * seasonal;
    if (cache) {
        cache->clear();
        cache->put(std::move(trend));
        cache->put(std::move(seasonal));
    }
    return y;
}

Matrix DLinear::backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t) {
    add_real_grad(params_[0], cache.at(0) * grad_out.transpose());
    add_real_grad(params_[1], cache.at(1) * grad_out.transpose());
    const Matrix g_trend = real_matrix(params_[0]) * grad_out;
    const Matrix g_seasonal = real_matrix(params_[1]) * grad_out;
    return g_seasonal + trend_op_.transpose() * (g_trend - g_seasonal);
}

nlohmann::json DLinear::config_json() const {
    return {{"seq_len", seq_len_}, {"pred_len", pred_len_}, {"kernel", kernel_}, {"with_backcast", with_backcast_}};
}

Matrix DLinear::trend_weights() const { return real_matrix(params_[0]); }
Matrix DLinear::seasonal_weights() const { return real_matrix(params_[1]); }

void DLinear::set_weights(const Matrix& trend, const Matrix& seasonal) {
    set_real_matrix(params_[0], trend);
    set_real_matrix(params_[1], seasonal);
}

// DLinear + FITS -------------------------------------------------------------

DLinearPlusFits::DLinearPlusFits(fits::FitsConfig fits_cfg, Index kernel)
    : dlinear_(fits_cfg.seq_len, fits_cfg.pred_len, kernel, true), fits_(fits_cfg) {}

Matrix DLinearPlusFits::forward(const Matrix& x, std::size_t group, ForwardCache* cache) const {
    check_window(x, seq_len(), "dlinear_fits");
    ForwardCache* dc = nullptr;
    ForwardCache* fc = nullptr;
    if (cache) {
        cache->clear();
        cache->children.resize(2);
        dc = &cache->children[0];
        fc = &cache->children[1];
    }
    Matrix y = dlinear_.forward(x, 0, dc);
    const Matrix residual = x - y.topRows(seq_len());
    y += fits_.forward(residual, group, fc);
    return y;
}

Matrix DLinearPlusFits::backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) {
    const Matrix g_residual = fits_.backward(cache.children[1], grad_out, group);
    Matrix g_dl = grad_out;
    g_dl.topRows(seq_len()) -= g_residual;
    return g_residual + dlinear_.backward(cache.children[0], g_dl, 0);
}

void DLinearPlusFits::set_training(bool training) {
    Forecaster::set_training(training);
    dlinear_.set_training(training);
    fits_.set_training(training);
}

nlohmann::json DLinearPlusFits::config_json() const {
    return {{"fits", fits_.config_json()}, {"kernel", dlinear_.kernel()}};
}

// FITS + DLinear -------------------------------------------------------------

FitsPlusDLinear::FitsPlusDLinear(fits::FitsConfig fits_cfg, Index kernel)
    : fits_(fits_cfg), dlinear_(fits_cfg.seq_len, fits_cfg.pred_len, kernel, false) {}

Matrix FitsPlusDLinear::forward(const Matrix& x, std::size_t group, ForwardCache* cache) const {
    check_window(x, seq_len(), "fits_dlinear");
    ForwardCache* fc = nullptr;
    ForwardCache* dc = nullptr;
    if (cache) {
        cache->clear();
        cache->children.resize(2);
        fc = &cache->children[0];
        dc = &cache->children[1];
    }
    const Matrix f = fits_.forward(x, group, fc);
    return dlinear_.forward(f.topRows(seq_len()), 0, dc);
}

Matrix FitsPlusDLinear::backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) {
    const Matrix g_backcast = dlinear_.backward(cache.children[1], grad_out, 0);
    Matrix g_f = Matrix::Zero(fits_.output_len(), grad_out.cols());
    g_f.topRows(seq_len()) = g_backcast;
    return fits_.backward(cache.children[0], g_f, group);
}

void FitsPlusDLinear::set_training(bool training) {
    Forecaster::set_training(training);
    dlinear_.set_training(training);
    fits_.set_training(training);
}

nlohmann::json FitsPlusDLinear::config_json() const {
    return {{"fits", fits_.config_json()}, {"kernel", dlinear_.kernel()}};
}

}  // namespace freqcast::linear
