#include "doctest.h"
#include "support.hpp"

#include "freqcast/fits.hpp"
#include "freqcast/train.hpp"

#include <numbers>

using namespace freqcast;
using namespace freqcast::fits;
using testing::random_matrix;

namespace {

FitsConfig small_config(Variant v = Variant::plain) {
    FitsConfig c;
    c.seq_len = 48;
    c.pred_len = 16;
    c.base_period = 12;
    c.harmonic_order = 3;  // cutoff 12
    c.variant = v;
    c.depth = 2;
    c.hidden = 8;
    c.seed = 3;
    return c;
}

Vector sine_mix(Index len, double period, const std::vector<double>& amps, double phase = 0.0) {
    Vector x(len);
    for (Index t = 0; t < len; ++t) {
        double v = 0.0;
        for (std::size_t k = 0; k < amps.size(); ++k)
            v += amps[k] * std::sin(2 * std::numbers::pi * double(k + 1) * double(t) / period + phase);
        x(t) = v;
    }
    return x;
}

}  // namespace

TEST_CASE("normalize handles constant and two-point windows") {
    Matrix c(4, 1);
    c << 2, 2, 2, 2;
    auto [zn, zs] = normalize(c);
    CHECK(zn.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zs.mean(0) == 2.0);
    CHECK(zs.std(0) == doctest::Approx(kStdFloor));
    CHECK(zs.floored[0]);

    Matrix two(2, 1);
    two << 0, 2;
    auto [tn, ts] = normalize(two);
    CHECK(tn(0, 0) == doctest::Approx(-1.0));
    CHECK(tn(1, 0) == doctest::Approx(1.0));
    CHECK(ts.mean(0) == 1.0);
    CHECK(ts.std(0) == 1.0);

    CHECK_THROWS(normalize(Matrix::Zero(1, 1)));
}

TEST_CASE("normalize output is standardized and denormalize inverts it") {
    const Matrix x = random_matrix(50, 3, 11, 4.0).array() + 7.0;
    auto [xn, s] = normalize(x);
    for (Index c = 0; c < 3; ++c) {
        CHECK(std::abs(xn.col(c).mean()) < 1e-9);
        CHECK(std::abs(std::sqrt(xn.col(c).array().square().mean()) - 1.0) < 1e-6);
    }
    CHECK((denormalize(xn, s) - x).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("complex_linear examples") {
    Eigen::VectorXcd x(3);
    x << std::complex<double>(1, 2), std::complex<double>(-0.5, 0), std::complex<double>(0, 3);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(3, 3);
    CHECK((complex_linear(x, eye, Eigen::VectorXcd::Zero(3)) - x).norm() == 0.0);

    Eigen::VectorXcd one(1);
    one << std::complex<double>(1, 0);
    Eigen::MatrixXcd rot(1, 1);
    rot << std::complex<double>(0, 1);
    const auto r = complex_linear(one, rot, Eigen::VectorXcd::Zero(1));
    CHECK(r(0).real() == 0.0);
    CHECK(r(0).imag() == 1.0);

    std::mt19937_64 rng(5);
    const Eigen::VectorXcd v = testing::random_cvec(4, rng);
    Eigen::MatrixXcd w(4, 6);
    for (Index j = 0; j < 6; ++j) w.col(j) = testing::random_cvec(4, rng);
    const Eigen::VectorXcd b = testing::random_cvec(6, rng);
    const auto out = complex_linear(v, w, b);
    for (Index j = 0; j < 6; ++j) {
        std::complex<double> acc = b(j);
        for (Index i = 0; i < 4; ++i) acc += v(i) * w(i, j);
        CHECK(std::abs(out(j) - acc) < 1e-12);
    }
    CHECK_THROWS(complex_linear(v, Eigen::MatrixXcd::Zero(3, 6), b));
}

TEST_CASE("mod_relu and c_relu") {
    const auto a = mod_relu({3, 4}, -2);
    CHECK(a.real() == doctest::Approx(1.8));
    CHECK(a.imag() == doctest::Approx(2.4));
    CHECK(mod_relu({0.6, 0.8}, -2) == std::complex<double>(0, 0));
    CHECK(mod_relu({0, 0}, 1) == std::complex<double>(0, 0));
    const std::complex<double> z(-1.3, 0.4);
    CHECK(std::abs(mod_relu(z, 0.0) - z) < 1e-15);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const std::complex<double> v(g(rng), g(rng));
        const auto out = mod_relu(v, g(rng));
        if (out != std::complex<double>(0, 0)) CHECK(std::abs(std::arg(out) - std::arg(v)) < 1e-12);
    }

    CHECK(c_relu({-1, 2}) == std::complex<double>(0, 2));
    CHECK(c_relu({3, 4}) == std::complex<double>(3, 4));
    CHECK(c_relu({-1, -1}) == std::complex<double>(0, 0));
}

TEST_CASE("complex_dropout") {
    std::mt19937_64 rng(1);
    const Eigen::VectorXcd z = Eigen::VectorXcd::Constant(100000, {1.0, -2.0});
    CHECK((complex_dropout(z, 0.0, true, rng) - z).norm() == 0.0);
    CHECK((complex_dropout(z, 0.7, false, rng) - z).norm() == 0.0);
    const auto d = complex_dropout(z, 0.5, true, rng);
    Index kept = 0;
    for (Index i = 0; i < d.size(); ++i) {
        // both parts zeroed together
        CHECK((d(i).real() == 0.0) == (d(i).imag() == 0.0));
        if (d(i).real() != 0.0) ++kept;
    }
    const double frac = double(kept) / double(d.size());
    CHECK(std::abs(frac - 0.5) < 0.01);
    CHECK(std::abs(d.mean().real() - 1.0) < 0.02);
    CHECK(std::abs(d.mean().imag() + 2.0) < 0.04);
}

TEST_CASE("bypass_mix") {
    const Matrix f = Matrix::Constant(1, 1, 2.0);
    const Matrix l = Matrix::Constant(1, 1, 4.0);
    CHECK(bypass_mix(f, l, 0.0)(0, 0) == 2.0);
    CHECK(bypass_mix(f, l, 1.0)(0, 0) == 4.0);
    CHECK(bypass_mix(f, l, 0.5)(0, 0) == 3.0);
}

TEST_CASE("cutoff and bin arithmetic") {
    FitsConfig c;  // 360 / 96 / 24 / 6
    CHECK(c.cutoff_bin() == 90);
    CHECK(c.in_bins() == 91);
    CHECK(c.output_len() == 456);
    CHECK(c.out_bins() == 115);  // floor(91 * 456 / 360)
    FitsConfig bad = c;
    bad.harmonic_order = 100;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("zero-weight FITS predicts the window mean") {
    FitsConfig c = small_config();
    c.zero_init = true;
    FitsModel m(c);
    const Matrix x = random_matrix(c.seq_len, 3, 21, 2.0).array() + 5.0;
    const Matrix y = fits_forward(m, x);
    CHECK(y.rows() == c.output_len());
    for (Index j = 0; j < 3; ++j) CHECK((y.col(j).array() - x.col(j).mean()).abs().maxCoeff() < 1e-12);
    CHECK_THROWS(fits_forward(m, Matrix::Zero(c.seq_len + 1, 1)));
}

TEST_CASE("identity weights reproduce the low-passed input") {
    FitsConfig c;
    c.seq_len = 64;
    c.pred_len = 0;
    c.cutoff_override = 32;
    c.complex_bias = false;
    FitsModel m(c);
    const Index k = c.in_bins();
    REQUIRE(c.out_bins() == k);
    m.set_frequency_weights(Eigen::MatrixXcd::Identity(k, k));
    const Matrix x = random_matrix(64, 2, 4);
    CHECK((fits_forward(m, x) - x).cwiseAbs().maxCoeff() < 1e-7);

    // A lower cutoff yields the low-passed window.
    c.cutoff_override = 10;
    FitsModel lp(c);
    lp.set_frequency_weights(Eigen::MatrixXcd::Identity(11, 11));
    const Vector col = x.col(0);
    const Vector expect = spectral::irfft(spectral::low_pass(spectral::rfft<double>(col), 10), 64);
    const Vector got = fits_forward(lp, col);
    // Low-passing the normalized window is the same as low-passing the raw one.
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("batched FITS agrees with the per-sample reference") {
    FitsConfig c;
    c.seq_len = 90;
    c.pred_len = 30;
    c.base_period = 15;
    c.harmonic_order = 4;
    FitsModel m(c);
    testing::randomize(m, 8, 0.2);
    const Matrix x = random_matrix(c.seq_len, 4, 31, 3.0);
    const Matrix y = fits_forward(m, x);
    const auto w = m.frequency_weights();
    const Parameter* bp = m.params().find("freq.bias");
    REQUIRE(bp != nullptr);
    const auto bs = complex_matrix(*bp);
    Eigen::VectorXcd b(bs.re.rows());
    for (Index j = 0; j < b.size(); ++j) b(j) = {bs.re(j, 0), bs.im(j, 0)};
    for (Index j = 0; j < 4; ++j) {
        const Vector ref = testing::reference_fits(x.col(j), w, b, c);
        CHECK((y.col(j) - ref).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("plain FITS is linear in normalized coordinates") {
    FitsConfig c = small_config();
    c.complex_bias = false;
    FitsModel m(c);
    testing::randomize(m, 2, 0.3);
    auto normalized = [](const Matrix& v) { return normalize(v).first; };
    auto nmap = [&](const Matrix& v) {
        const auto [vn, s] = normalize(v);
        const Matrix y = m.forward(v, 0, nullptr);
        return Matrix((y.array() - s.mean(0)) / s.std(0));
    };
    const Matrix x1 = normalized(random_matrix(c.seq_len, 1, 40));
    const Matrix x2 = normalized(random_matrix(c.seq_len, 1, 41));
    const double a = 1.7, b = -0.6;
    const Matrix mix = a * x1 + b * x2;
    const double s = std::sqrt(mix.array().square().mean());
    const Matrix lhs = s * nmap(mix);
    const Matrix rhs = a * nmap(x1) + b * nmap(x2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("shared and individual modes agree when weights agree") {
    FitsConfig shared = small_config();
    FitsConfig indiv = shared;
    indiv.channel_mode = ChannelMode::individual;
    indiv.channels = 3;
    FitsModel ms(shared), mi(indiv);
    CHECK(mi.group_count() == 3);
    for (std::size_t g = 0; g < 3; ++g) mi.set_frequency_weights(ms.frequency_weights(), g);
    const Matrix x = random_matrix(shared.seq_len, 3, 12);
    const Matrix ys = fits_forward(ms, x);
    const Matrix yi = fits_forward(mi, x);
    CHECK((ys - yi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parameter counts follow the closed form") {
    FitsConfig c;  // etth1 shape
    FitsModel m(c);
    CHECK(m.param_count() == 2 * 91 * 115 + 2 * 115);
    CHECK(m.param_count() == FitsModel::expected_param_count(c));
    c.complex_bias = false;
    CHECK(FitsModel(c).param_count() == 2 * 91 * 115);
    c.channel_mode = ChannelMode::individual;
    c.channels = 7;
    CHECK(FitsModel(c).param_count() == 7 * 2 * 91 * 115);
    for (Variant v : {Variant::deep_modrelu, Variant::deep_crelu, Variant::deep_after_upscaler, Variant::real_deep,
                      Variant::bypass}) {
        FitsConfig d = small_config(v);
        CHECK(FitsModel(d).param_count() == FitsModel::expected_param_count(d));
    }
}

TEST_CASE("gradients match finite differences for every variant") {
    for (Variant v : {Variant::plain, Variant::deep_modrelu, Variant::deep_crelu, Variant::deep_after_upscaler,
                      Variant::real_deep, Variant::bypass}) {
        for (ChannelMode mode : {ChannelMode::shared, ChannelMode::individual}) {
            CAPTURE(to_string(v));
            CAPTURE(to_string(mode));
            FitsConfig c = small_config(v);
            c.channel_mode = mode;
            c.channels = 2;
            FitsModel m(c);
            testing::randomize(m, 100 + int(v), 0.3);
            if (v == Variant::bypass)
                for (auto& p : m.params())
                    if (p.name.ends_with("beta")) p.value(0) = 0.3;
            const Matrix x = random_matrix(c.seq_len, mode == ChannelMode::shared ? 2 : 1, 55, 2.0).array() + 1.0;
            for (std::size_t g = 0; g < m.group_count(); ++g) {
                const auto r = testing::grad_check(m, x, g, 7 + g);
                CHECK(r.max_param_err < 1e-4);
                CHECK(r.max_input_err < 1e-4);
            }
        }
    }
}

TEST_CASE("dead ModReLU units pass no gradient") {
    FitsConfig c = small_config(Variant::deep_modrelu);
    c.depth = 1;
    FitsModel m(c);
    testing::randomize(m, 4, 0.2);
    for (auto& p : m.params())
        if (p.name.find("modrelu") != std::string::npos) p.value.setConstant(-1e6);
    const Matrix x = random_matrix(c.seq_len, 2, 3);
    ForwardCache cache;
    m.zero_grad();
    m.forward(x, 0, &cache);
    m.backward(cache, random_matrix(c.output_len(), 2, 4), 0);
    for (const auto& p : m.params()) {
        if (p.name.starts_with("freq.layer0") || p.name.find("modrelu") != std::string::npos)
            CHECK(p.grad.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("bypass beta stays inside [0, 1]") {
    FitsModel m(small_config(Variant::bypass));
    for (auto& p : m.params())
        if (p.name == "bypass.beta") p.value(0) = 1.7;
    m.after_step();
    CHECK(m.params().find("bypass.beta")->value(0) == 1.0);
}

TEST_CASE("reconstruction task") {
    SUBCASE("factor 1 equals a plain forward with eta 1") {
        FitsConfig c;
        c.seq_len = 40;
        c.pred_len = 0;
        c.base_period = 10;
        c.harmonic_order = 3;
        FitsModel m(c);
        const Matrix x = random_matrix(40, 2, 8);
        CHECK((fits_reconstruct(m, x, 1) - fits_forward(m, x)).cwiseAbs().maxCoeff() == 0.0);
        CHECK_THROWS(fits_reconstruct(m, Matrix::Zero(41, 1), 2));
        CHECK_THROWS(downsample(Matrix::Zero(41, 1), 2));
    }
    SUBCASE("a sine is recovered from half its samples") {
        const Index n = 120;
        FitsConfig c;
        c.seq_len = n / 2;
        c.pred_len = n / 2;
        c.base_period = 30;  // period 60 at the downsampled rate is 30 samples
        c.harmonic_order = 3;
        FitsModel m(c);
        const Vector series = sine_mix(2000, 60.0, {1.0});
        std::vector<Matrix> in, target;
        for (Index s = 0; s + n <= series.size(); s += 37) {
            const Matrix full = series.segment(s, n);
            in.push_back(downsample(full, 2));
            auto [tn, ts] = normalize(in.back());
            target.push_back(full);
        }
        train::PairFitConfig cfg;
        cfg.epochs = 600;
        cfg.learning_rate = 5e-3;
        train::fit_pairs(m, in, target, cfg);
        double mse = 0.0;
        for (std::size_t i = 0; i < in.size(); ++i) {
            const auto [xn, s] = normalize(target[i]);
            const Matrix rec = fits_reconstruct(m, target[i], 2);
            mse += ((rec.array() - s.mean(0)) / s.std(0) - xn.array()).square().mean();
        }
        CHECK(mse / double(in.size()) < 1e-3);
    }
}

TEST_CASE("harmonics above the cutoff are dropped") {
    // Period 60 inside a 360 window puts the base frequency in bin 6; a
    // harmonic order of 5 keeps bins up to 30.
    FitsConfig c;
    c.seq_len = 360;
    c.pred_len = 120;
    c.base_period = 60;
    c.harmonic_order = 5;
    FitsModel m(c);
    const std::vector<double> amps{1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.3, 0.3};
    const Vector series = sine_mix(4000, 60.0, amps);
    std::vector<Matrix> in, target;
    for (Index s = 0; s + 480 <= series.size(); s += 53) {
        in.push_back(series.segment(s, 360));
        target.push_back(series.segment(s, 480));
    }
    train::PairFitConfig cfg;
    cfg.epochs = 400;
    cfg.learning_rate = 5e-3;
    train::fit_pairs(m, in, target, cfg);
    const Vector out = m.forward(in[3], 0, nullptr);
    const auto spec_out = spectral::rfft<double>(out);
    const auto spec_true = spectral::rfft<double>(Vector(target[3]));
    // Harmonic k of period 60 in 480 samples sits at bin 8k.
    for (int k = 1; k <= 5; ++k)
        CHECK(std::abs(spec_out.bins(8 * k)) == doctest::Approx(std::abs(spec_true.bins(8 * k))).epsilon(0.05));
    for (int k = 6; k <= 8; ++k) {
        CHECK(std::abs(spec_true.bins(8 * k)) > 20.0);
        CHECK(std::abs(spec_out.bins(8 * k)) < 1e-6 * std::abs(spec_true.bins(8 * k)) + 1e-6);
    }
}

TEST_CASE("a period longer than the output leaks into higher bins") {
    FitsConfig c;
    c.seq_len = 100;
    c.pred_len = 50;
    c.cutoff_override = 20;
    c.zero_init = true;
    FitsModel m(c);
    const Vector series = sine_mix(3000, 1000.0, {1.0});
    std::vector<Matrix> in, target;
    for (Index s = 0; s + 150 <= series.size(); s += 41) {
        in.push_back(series.segment(s, 100));
        target.push_back(series.segment(s, 150));
    }
    train::PairFitConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 5e-3;
    train::fit_pairs(m, in, target, cfg);
    const auto w = m.frequency_weights();
    // The true frequency (0.15 bins of the 150-sample output) is below bin 1.
    CHECK(w.rightCols(w.cols() - 2).cwiseAbs().sum() > 0.0);
}
