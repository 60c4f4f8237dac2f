#pragma once

// Shared oracles and helpers for the test binaries.

#include "freqcast/fits.hpp"
#include "freqcast/model.hpp"
#include "freqcast/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using freqcast::Index;
using freqcast::Matrix;
using freqcast::Vector;
using cvec = Eigen::VectorXcd;

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = g(rng);
    return m;
}

// w_t = mu + phi w~_{t-1} + e_t - theta e_{t-1}, with a burn-in.
inline Vector simulate_arma(Index n, const std::vector<double>& phi, const std::vector<double>& theta, std::uint64_t seed,
                     double mu = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const Index burn = 500;
    std::vector<double> w(n + burn, 0.0), e(n + burn, 0.0);
    for (Index t = 0; t < n + burn; ++t) {
        e[t] = g(rng);
        double v = e[t];
        for (std::size_t i = 0; i < phi.size(); ++i)
            if (t > Index(i)) v += phi[i] * w[t - 1 - i];
        for (std::size_t j = 0; j < theta.size(); ++j)
            if (t > Index(j)) v -= theta[j] * e[t - 1 - j];
        w[t] = v;
    }
    Vector out(n);
    for (Index t = 0; t < n; ++t) out(t) = w[burn + t] + mu;
    return out;
}

inline cvec random_cvec(Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    cvec v(n);
    for (Index i = 0; i < n; ++i) v(i) = {g(rng), g(rng)};
    return v;
}

/// Direct O(N^2) evaluation of X_k = sum_n x_n exp(-2 pi i k n / N).
inline cvec naive_dft(const cvec& x) {
    const Index n = x.size();
    cvec out(n);
    for (Index k = 0; k < n; ++k) {
        std::complex<long double> acc = 0;
        for (Index t = 0; t < n; ++t) {
            const long double ang = -2.0L * std::numbers::pi_v<long double> * (long double)((k * t) % n) / (long double)n;
            acc += std::complex<long double>(x(t).real(), x(t).imag()) * std::polar(1.0L, ang);
        }
        out(k) = {double(acc.real()), double(acc.imag())};
    }
    return out;
}

inline double rel_err(const cvec& a, const cvec& b) {
    const double scale = std::max(b.norm(), 1e-300);
    return (a - b).norm() / scale;
}

/// Plain FITS on one window written out sample by sample with the public
/// spectral functions, independent of the batched engine.
inline Vector reference_fits(const Vector& x, const Eigen::MatrixXcd& w, const Eigen::VectorXcd& b,
                             const freqcast::fits::FitsConfig& cfg) {
    const Index L = x.size();
    const double mean = x.mean();
    double sd = std::sqrt((x.array() - mean).square().sum() / double(L));
    sd = std::max(sd, 1e-5);
    const Vector xn = (x.array() - mean) / sd;
    auto spec = freqcast::spectral::rfft<double>(xn);
    spec = freqcast::spectral::low_pass(spec, cfg.cutoff_bin());
    const Index kin = spec.bins.size();
    const Index kout = w.cols();
    freqcast::spectral::Spectrum<double> up;
    up.bins.resize(kout);
    up.source_len = cfg.output_len();
    for (Index j = 0; j < kout; ++j) {
        std::complex<double> acc = b(j);
        for (Index i = 0; i < kin; ++i) acc += spec.bins(i) * w(i, j);
        up.bins(j) = acc * cfg.eta();
    }
    const Vector y = freqcast::spectral::irfft(up, cfg.output_len());
    return y.array() * sd + mean;
}

struct GradCheck {
    double max_param_err = 0.0;
    double max_input_err = 0.0;
    Index checked = 0;
};

inline double rel(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); }

/// Compares backward() with central differences of sum(G .* forward(x)) for
/// every parameter scalar (or a strided subset when there are many) and every
/// input entry.
inline GradCheck grad_check(freqcast::Forecaster& model, const Matrix& x, std::size_t group, std::uint64_t seed,
                            Index max_params = 400, double h = 1e-5) {
    const Matrix g = random_matrix(model.output_len(), x.cols(), seed + 17);
    auto loss = [&](const Matrix& in) { return (model.forward(in, group, nullptr).array() * g.array()).sum(); };

    model.zero_grad();
    freqcast::ForwardCache cache;
    model.forward(x, group, &cache);
    const Matrix gx = model.backward(cache, g, group);

    GradCheck res;
    for (auto* store : model.stores()) {
        for (auto& p : *store) {
            const Index n = p.value.size();
            const Index stride = std::max<Index>(1, n / std::max<Index>(1, max_params));
            for (Index i = 0; i < n; i += stride) {
                const double orig = p.value(i);
                p.value(i) = orig + h;
                const double up = loss(x);
                p.value(i) = orig - h;
                const double down = loss(x);
                p.value(i) = orig;
                const double num = (up - down) / (2 * h);
                res.max_param_err = std::max(res.max_param_err, rel(p.grad(i), num));
                ++res.checked;
            }
        }
    }
    Matrix xp = x;
    for (Index j = 0; j < x.cols(); ++j) {
        for (Index i = 0; i < x.rows(); ++i) {
            const double orig = xp(i, j);
            xp(i, j) = orig + h;
            const double up = loss(xp);
            xp(i, j) = orig - h;
            const double down = loss(xp);
            xp(i, j) = orig;
            res.max_input_err = std::max(res.max_input_err, rel(gx(i, j), (up - down) / (2 * h)));
        }
    }
    return res;
}

/// Fills every parameter with small random values.
inline void randomize(freqcast::Forecaster& model, std::uint64_t seed, double scale = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gdist(0.0, scale);
    for (auto* store : model.stores())
        for (auto& p : *store)
            for (Index i = 0; i < p.value.size(); ++i) p.value(i) = gdist(rng);
}

}  // namespace testing
