#include "freqcast/fits.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freqcast::fits {

std::string to_string(ChannelMode m) { return m == ChannelMode::shared ? "shared" : "individual"; }

std::string to_string(Variant v) {
    switch (v) {
        case Variant::plain: return "plain";
        case Variant::deep_modrelu: return "deep_modrelu";
        case Variant::deep_crelu: return "deep_crelu";
        case Variant::deep_after_upscaler: return "deep_after_upscaler";
        case Variant::real_deep: return "real_deep";
        case Variant::bypass: return "bypass";
    }
    return "plain";
}

ChannelMode channel_mode_from_string(const std::string& s) {
    if (s == "shared") return ChannelMode::shared;
    if (s == "individual") return ChannelMode::individual;
    throw std::invalid_argument("unknown channel mode: " + s);
}

Variant variant_from_string(const std::string& s) {
    for (Variant v : {Variant::plain, Variant::deep_modrelu, Variant::deep_crelu, Variant::deep_after_upscaler,
                      Variant::real_deep, Variant::bypass})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown FITS variant: " + s);
}

Index FitsConfig::cutoff_bin() const {
    if (cutoff_override) return *cutoff_override;
    return harmonic_order * seq_len / base_period;
}

Index FitsConfig::out_bins() const {
    const auto scaled = static_cast<Index>(std::floor(double(in_bins()) * double(output_len()) / double(seq_len)));
    return std::min(scaled, output_len() / 2 + 1);
}

void FitsConfig::validate() const {
    if (seq_len < 2) throw std::invalid_argument("seq_len must be at least 2");
    if (pred_len < 0) throw std::invalid_argument("pred_len must be non-negative");
    if (base_period < 1 || harmonic_order < 1) throw std::invalid_argument("base period and harmonic order must be positive");
    if (cutoff_bin() < 0 || cutoff_bin() > seq_len / 2)
        throw std::invalid_argument("cutoff bin " + std::to_string(cutoff_bin()) + " exceeds seq_len/2");
    if (channels < 1) throw std::invalid_argument("channels must be positive");
    if (depth < 0 || hidden < 1) throw std::invalid_argument("invalid depth/hidden");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
}

nlohmann::json FitsConfig::to_json() const {
    nlohmann::json j{{"seq_len", seq_len},
                     {"pred_len", pred_len},
                     {"base_period", base_period},
                     {"harmonic_order", harmonic_order},
                     {"channel_mode", to_string(channel_mode)},
                     {"channels", channels},
                     {"variant", to_string(variant)},
                     {"depth", depth},
                     {"hidden", hidden},
                     {"dropout", dropout},
                     {"complex_bias", complex_bias},
                     {"zero_init", zero_init},
                     {"seed", seed},
                     {"cutoff_bin", cutoff_bin()}};
    j["cutoff_override"] = cutoff_override ? nlohmann::json(*cutoff_override) : nlohmann::json(nullptr);
    return j;
}

FitsConfig FitsConfig::from_json(const nlohmann::json& j) {
    FitsConfig c;
    c.seq_len = j.at("seq_len");
    c.pred_len = j.at("pred_len");
    c.base_period = j.at("base_period");
    c.harmonic_order = j.at("harmonic_order");
    c.channel_mode = channel_mode_from_string(j.at("channel_mode"));
    c.channels = j.at("channels");
    c.variant = variant_from_string(j.at("variant"));
    c.depth = j.at("depth");
    c.hidden = j.at("hidden");
    c.dropout = j.at("dropout");
    c.complex_bias = j.at("complex_bias");
    c.zero_init = j.at("zero_init");
    c.seed = j.at("seed");
    if (j.contains("cutoff_override") && !j["cutoff_override"].is_null())
        c.cutoff_override = j["cutoff_override"].get<Index>();
    return c;
}

std::pair<Matrix, InstanceStats> normalize(const Matrix& x) {
    if (x.rows() < 2) throw std::invalid_argument("normalize: window length must be at least 2");
    InstanceStats s;
    s.mean = x.colwise().mean().transpose();
    s.std.resize(x.cols());
    s.floored.assign(static_cast<std::size_t>(x.cols()), false);
    Matrix out(x.rows(), x.cols());
    for (Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - s.mean(c)).square().mean();
        double sd = std::sqrt(var);
        if (sd < kStdFloor) {
            sd = kStdFloor;
            s.floored[static_cast<std::size_t>(c)] = true;
        }
        s.std(c) = sd;
        out.col(c) = (x.col(c).array() - s.mean(c)) / sd;
    }
    return {std::move(out), std::move(s)};
}

Matrix denormalize(const Matrix& y, const InstanceStats& stats) {
    if (y.cols() != stats.mean.size()) throw std::invalid_argument("denormalize: channel count mismatch");
    Matrix out(y.rows(), y.cols());
    for (Index c = 0; c < y.cols(); ++c) out.col(c) = y.col(c).array() * stats.std(c) + stats.mean(c);
    return out;
}

Matrix normalize_backward(const Matrix& x_normalized, const Matrix& y_normalized, const InstanceStats& stats,
                          const Matrix& grad_x_normalized, const Matrix& grad_y) {
    const Index len = x_normalized.rows();
    Matrix grad_x(len, x_normalized.cols());
    for (Index c = 0; c < x_normalized.cols(); ++c) {
        const double sd = stats.std(c);
        const double grad_mean = grad_y.col(c).sum();
        double grad_std = grad_y.col(c).dot(y_normalized.col(c));
        const auto& gxn = grad_x_normalized.col(c);
        const auto& xn = x_normalized.col(c);
        // xn itself depends on sd.
        grad_std -= gxn.dot(xn) / sd;
        const double sum_gxn = gxn.sum();
        grad_x.col(c) = gxn / sd;
        grad_x.col(c).array() += (grad_mean - sum_gxn / sd) / double(len);
        if (!stats.floored[static_cast<std::size_t>(c)]) {
            // d sd / d x_i = (x_i - mu) / (len * sd) = xn_i / len
            grad_x.col(c) += xn * (grad_std / double(len));
        }
    }
    return grad_x;
}

ComplexVec complex_linear(const ComplexVec& x, const ComplexMat& w, const ComplexVec& b) {
    if (w.rows() != x.size() || w.cols() != b.size()) throw std::invalid_argument("complex_linear: shape mismatch");
    return w.transpose() * x + b;
}

std::complex<double> mod_relu(std::complex<double> z, double b) {
    const double r = std::abs(z);
    if (r == 0.0 || r + b < 0.0) return {0.0, 0.0};
    return z * ((r + b) / r);
}

std::complex<double> c_relu(std::complex<double> z) {
    return {std::max(z.real(), 0.0), std::max(z.imag(), 0.0)};
}

ComplexVec complex_dropout(const ComplexVec& z, double p, bool training, std::mt19937_64& rng) {
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("complex_dropout: p must be in [0, 1)");
    if (!training || p == 0.0) return z;
    std::bernoulli_distribution keep(1.0 - p);
    ComplexVec out(z.size());
    const double scale = 1.0 / (1.0 - p);
    for (Index i = 0; i < z.size(); ++i) out(i) = keep(rng) ? z(i) * scale : std::complex<double>{};
    return out;
}

Matrix bypass_mix(const Matrix& fits_out, const Matrix& linear_out, double beta) {
    if (fits_out.rows() != linear_out.rows() || fits_out.cols() != linear_out.cols())
        throw std::invalid_argument("bypass_mix: shape mismatch");
    return (1.0 - beta) * fits_out + beta * linear_out;
}

namespace {

void fill_uniform(Parameter& p, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index i = 0; i < p.value.size(); ++i) p.value(i) = u(rng);
}

// Complex affine map on split storage: Y = W^T X + b.
SplitComplex apply_complex(const SplitComplex& w, const SplitComplex* b, const SplitComplex& x) {
    SplitComplex y;
    y.re.noalias() = w.re.transpose() * x.re;
    y.re.noalias() -= w.im.transpose() * x.im;
    y.im.noalias() = w.re.transpose() * x.im;
    y.im.noalias() += w.im.transpose() * x.re;
    if (b) {
        y.re.colwise() += b->re.col(0);
        y.im.colwise() += b->im.col(0);
    }
    return y;
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& pre, const Matrix& grad) {
    return (pre.array() > 0.0).select(grad, 0.0);
}

}  // namespace

FitsModel::FitsModel(FitsConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    analysis_ = spectral::RealDftBasis<double>(cfg_.seq_len, cfg_.in_bins());
    synthesis_ = spectral::RealDftBasis<double>(cfg_.output_len(), cfg_.out_bins());
    build();
    init_weights();
}

void FitsModel::build() {
    const Index groups = cfg_.channel_mode == ChannelMode::individual ? cfg_.channels : 1;
    const Index kin = cfg_.in_bins();
    const Index kout = cfg_.out_bins();
    const Index depth = (cfg_.variant == Variant::plain || cfg_.variant == Variant::bypass ||
                         cfg_.variant == Variant::deep_after_upscaler)
                            ? 0
                            : cfg_.depth;
    for (Index gi = 0; gi < groups; ++gi) {
        const std::string prefix = groups > 1 ? "g" + std::to_string(gi) + "." : "";
        Group g;
        if (cfg_.variant == Variant::real_deep) {
            Index in = 2 * kin;
            for (Index l = 0; l <= depth; ++l) {
                const Index out = l == depth ? 2 * kout : cfg_.hidden;
                Layer layer;
                layer.weight = params_.add_real(prefix + "freq.layer" + std::to_string(l) + ".weight", in, out);
                layer.bias = params_.add_real(prefix + "freq.layer" + std::to_string(l) + ".bias", out, 1);
                layer.has_bias = true;
                g.spectral_layers.push_back(layer);
                in = out;
            }
        } else {
            Index in = kin;
            for (Index l = 0; l <= depth; ++l) {
                const Index out = l == depth ? kout : cfg_.hidden;
                const std::string name = depth == 0 ? "freq" : "freq.layer" + std::to_string(l);
                Layer layer;
                layer.weight = params_.add_complex(prefix + name + ".weight", in, out);
                if (cfg_.complex_bias) {
                    layer.bias = params_.add_complex(prefix + name + ".bias", out, 1);
                    layer.has_bias = true;
                }
                g.spectral_layers.push_back(layer);
                if (l < depth && cfg_.variant == Variant::deep_modrelu)
                    g.modrelu_bias.push_back(
                        params_.add_real(prefix + "freq.modrelu" + std::to_string(l) + ".bias", out, 1));
                in = out;
            }
        }
        if (cfg_.variant == Variant::deep_after_upscaler && cfg_.depth > 0) {
            Index in = cfg_.output_len();
            for (Index l = 0; l <= cfg_.depth; ++l) {
                const Index out = l == cfg_.depth ? cfg_.output_len() : cfg_.hidden;
                Layer layer;
                layer.weight = params_.add_real(prefix + "time.layer" + std::to_string(l) + ".weight", in, out);
                layer.bias = params_.add_real(prefix + "time.layer" + std::to_string(l) + ".bias", out, 1);
                layer.has_bias = true;
                g.time_layers.push_back(layer);
                in = out;
            }
        }
        if (cfg_.variant == Variant::bypass) {
            g.bypass_weight = params_.add_real(prefix + "bypass.weight", cfg_.seq_len, cfg_.output_len());
            g.beta = params_.add_real(prefix + "bypass.beta", 1, 1);
        }
        groups_.push_back(std::move(g));
    }
}

void FitsModel::init_weights() {
    for (auto& g : groups_) {
        for (const auto& layer : g.spectral_layers) {
            Parameter& w = params_[layer.weight];
            if (!cfg_.zero_init) fill_uniform(w, 1.0 / double(w.rows), rng_);
        }
        for (const auto& layer : g.time_layers) {
            Parameter& w = params_[layer.weight];
            fill_uniform(w, 1.0 / std::sqrt(double(w.rows)), rng_);
        }
        if (cfg_.variant == Variant::bypass) {
            Parameter& w = params_[g.bypass_weight];
            if (!cfg_.zero_init) fill_uniform(w, 1.0 / double(w.rows), rng_);
            params_[g.beta].value(0) = 0.5;
        }
    }
}

Index FitsModel::expected_param_count(const FitsConfig& cfg) {
    const Index groups = cfg.channel_mode == ChannelMode::individual ? cfg.channels : 1;
    const Index kin = cfg.in_bins();
    const Index kout = cfg.out_bins();
    const Index h = cfg.hidden;
    const Index bias = cfg.complex_bias ? 1 : 0;
    Index per_group = 0;
    switch (cfg.variant) {
        case Variant::plain:
            per_group = 2 * kin * kout + bias * 2 * kout;
            break;
        case Variant::deep_modrelu:
        case Variant::deep_crelu: {
            Index in = kin;
            for (Index l = 0; l <= cfg.depth; ++l) {
                const Index out = l == cfg.depth ? kout : h;
                per_group += 2 * in * out + bias * 2 * out;
                in = out;
            }
            if (cfg.variant == Variant::deep_modrelu) per_group += cfg.depth * h;
            break;
        }
        case Variant::real_deep: {
            Index in = 2 * kin;
            for (Index l = 0; l <= cfg.depth; ++l) {
                const Index out = l == cfg.depth ? 2 * kout : h;
                per_group += in * out + out;
                in = out;
            }
            break;
        }
        case Variant::deep_after_upscaler: {
            per_group = 2 * kin * kout + bias * 2 * kout;
            if (cfg.depth > 0) {
                Index in = cfg.output_len();
                for (Index l = 0; l <= cfg.depth; ++l) {
                    const Index out = l == cfg.depth ? cfg.output_len() : h;
                    per_group += in * out + out;
                    in = out;
                }
            }
            break;
        }
        case Variant::bypass:
            per_group = 2 * kin * kout + bias * 2 * kout + cfg.seq_len * cfg.output_len() + 1;
            break;
    }
    return groups * per_group;
}

SplitComplex FitsModel::spectral_forward(const SplitComplex& in, const Group& g, ForwardCache* cache) const {
    const std::size_t n_layers = g.spectral_layers.size();
    if (cfg_.variant == Variant::real_deep) {
        Matrix h(in.re.rows() * 2, in.re.cols());
        h << in.re, in.im;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const Layer& layer = g.spectral_layers[l];
            if (cache) cache->put(h);
            Matrix pre = real_matrix(params_[layer.weight]).transpose() * h;
            pre.colwise() += params_[layer.bias].value;
            if (l + 1 < n_layers) {
                if (cache) cache->put(pre);
                h = relu(pre);
            } else {
                h = std::move(pre);
            }
        }
        const Index kout = h.rows() / 2;
        return {h.topRows(kout), h.bottomRows(kout)};
    }

    SplitComplex h = in;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Layer& layer = g.spectral_layers[l];
        if (cache) {
            cache->put(h.re);
            cache->put(h.im);
        }
        const SplitComplex w = complex_matrix(params_[layer.weight]);
        SplitComplex b;
        if (layer.has_bias) b = complex_matrix(params_[layer.bias]);
        h = apply_complex(w, layer.has_bias ? &b : nullptr, h);
        if (l + 1 == n_layers) break;
        if (cache) {
            cache->put(h.re);
            cache->put(h.im);
        }
        if (cfg_.variant == Variant::deep_modrelu) {
            const Vector& bias = params_[g.modrelu_bias[l]].value;
            for (Index j = 0; j < h.re.cols(); ++j) {
                for (Index i = 0; i < h.re.rows(); ++i) {
                    const auto z = mod_relu({h.re(i, j), h.im(i, j)}, bias(i));
                    h.re(i, j) = z.real();
                    h.im(i, j) = z.imag();
                }
            }
        } else {
            h.re = relu(h.re);
            h.im = relu(h.im);
        }
        Matrix mask;
        if (training_ && cfg_.dropout > 0.0) {
            std::bernoulli_distribution keep(1.0 - cfg_.dropout);
            mask.resize(h.re.rows(), h.re.cols());
            const double scale = 1.0 / (1.0 - cfg_.dropout);
            for (Index j = 0; j < mask.cols(); ++j)
                for (Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(rng_) ? scale : 0.0;
            h.re = h.re.cwiseProduct(mask);
            h.im = h.im.cwiseProduct(mask);
        }
        if (cache) cache->put(mask);
    }
    return h;
}

SplitComplex FitsModel::spectral_backward(const ForwardCache& cache, std::size_t& cursor, const SplitComplex& grad,
                                          Group& g) {
    const std::size_t n_layers = g.spectral_layers.size();
    if (cfg_.variant == Variant::real_deep) {
        Matrix gh(grad.re.rows() * 2, grad.re.cols());
        gh << grad.re, grad.im;
        for (std::size_t l = n_layers; l-- > 0;) {
            const Layer& layer = g.spectral_layers[l];
            if (l + 1 < n_layers) {
                const Matrix& pre = cache.at(--cursor);
                gh = relu_backward(pre, gh);
            }
            const Matrix& input = cache.at(--cursor);
            add_real_grad(params_[layer.weight], input * gh.transpose());
            params_[layer.bias].grad += gh.rowwise().sum();
            gh = real_matrix(params_[layer.weight]) * gh;
        }
        const Index kin = gh.rows() / 2;
        return {gh.topRows(kin), gh.bottomRows(kin)};
    }

    SplitComplex gh = grad;
    for (std::size_t l = n_layers; l-- > 0;) {
        const Layer& layer = g.spectral_layers[l];
        if (l + 1 < n_layers) {
            const Matrix& mask = cache.at(--cursor);
            if (mask.size() > 0) {
                gh.re = gh.re.cwiseProduct(mask);
                gh.im = gh.im.cwiseProduct(mask);
            }
            const Matrix& pre_im = cache.at(--cursor);
            const Matrix& pre_re = cache.at(--cursor);
            if (cfg_.variant == Variant::deep_modrelu) {
                Parameter& bp = params_[g.modrelu_bias[l]];
                const Vector& bias = bp.value;
                for (Index j = 0; j < gh.re.cols(); ++j) {
                    for (Index i = 0; i < gh.re.rows(); ++i) {
                        const double re = pre_re(i, j);
                        const double im = pre_im(i, j);
                        const double r = std::hypot(re, im);
                        const double b = bias(i);
                        if (r == 0.0 || r + b < 0.0) {
                            gh.re(i, j) = 0.0;
                            gh.im(i, j) = 0.0;
                            continue;
                        }
                        const double s = (r + b) / r;
                        const double r3 = r * r * r;
                        const double gre = gh.re(i, j);
                        const double gim = gh.im(i, j);
                        bp.grad(i) += (gre * re + gim * im) / r;
                        gh.re(i, j) = gre * (s - b * re * re / r3) - gim * (b * re * im / r3);
                        gh.im(i, j) = -gre * (b * re * im / r3) + gim * (s - b * im * im / r3);
                    }
                }
            } else {
                gh.re = relu_backward(pre_re, gh.re);
                gh.im = relu_backward(pre_im, gh.im);
            }
        }
        const Matrix& in_im = cache.at(--cursor);
        const Matrix& in_re = cache.at(--cursor);
        Parameter& wp = params_[layer.weight];
        const SplitComplex w = complex_matrix(wp);
        Matrix gw_re = in_re * gh.re.transpose();
        gw_re.noalias() += in_im * gh.im.transpose();
        Matrix gw_im = in_re * gh.im.transpose();
        gw_im.noalias() -= in_im * gh.re.transpose();
        add_complex_grad(wp, gw_re, gw_im);
        if (layer.has_bias) add_complex_grad(params_[layer.bias], gh.re.rowwise().sum(), gh.im.rowwise().sum());
        SplitComplex gin;
        gin.re.noalias() = w.re * gh.re;
        gin.re.noalias() += w.im * gh.im;
        gin.im.noalias() = w.re * gh.im;
        gin.im.noalias() -= w.im * gh.re;
        gh = std::move(gin);
    }
    return gh;
}

Matrix FitsModel::forward(const Matrix& x, std::size_t group, ForwardCache* cache) const {
    if (x.rows() != cfg_.seq_len)
        throw std::invalid_argument("fits: expected windows of length " + std::to_string(cfg_.seq_len) + ", got " +
                                    std::to_string(x.rows()));
    if (group >= groups_.size()) throw std::invalid_argument("fits: group index out of range");
    const Group& g = groups_[group];
    auto [xn, stats] = normalize(x);
    if (cache) {
        cache->clear();
        cache->put(xn);
        cache->put(stats.mean.transpose());
        cache->put(stats.std.transpose());
        Matrix floored(1, x.cols());
        for (Index c = 0; c < x.cols(); ++c) floored(0, c) = stats.floored[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
        cache->put(floored);
    }
    SplitComplex spec;
    analysis_.forward(xn, spec.re, spec.im);
    SplitComplex up = spectral_forward(spec, g, cache);
    const double eta = cfg_.eta();
    Matrix yn = synthesis_.inverse(up.re * eta, up.im * eta);

    if (!g.time_layers.empty()) {
        Matrix h = yn;
        for (std::size_t l = 0; l < g.time_layers.size(); ++l) {
            const Layer& layer = g.time_layers[l];
            if (cache) cache->put(h);
            Matrix pre = real_matrix(params_[layer.weight]).transpose() * h;
            pre.colwise() += params_[layer.bias].value;
            if (l + 1 < g.time_layers.size()) {
                if (cache) cache->put(pre);
                h = relu(pre);
            } else {
                h = std::move(pre);
            }
        }
        yn += h;
    }
    if (cfg_.variant == Variant::bypass) {
        const double beta = params_[g.beta].value(0);
        Matrix lin = real_matrix(params_[g.bypass_weight]).transpose() * xn;
        if (cache) {
            cache->put(yn);
            cache->put(lin);
        }
        yn = bypass_mix(yn, lin, beta);
    }
    if (cache) cache->put(yn);
    return denormalize(yn, stats);
}

Matrix FitsModel::backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) {
    Group& g = groups_[group];
    std::size_t cursor = cache.saved.size();
    const Matrix& yn = cache.at(--cursor);
    const Matrix& xn = cache.at(0);
    InstanceStats stats;
    stats.mean = cache.at(1).transpose();
    stats.std = cache.at(2).transpose();
    stats.floored.resize(static_cast<std::size_t>(xn.cols()));
    for (Index c = 0; c < xn.cols(); ++c) stats.floored[static_cast<std::size_t>(c)] = cache.at(3)(0, c) != 0.0;

    // Through denormalization.
    Matrix g_yn = grad_out;
    for (Index c = 0; c < g_yn.cols(); ++c) g_yn.col(c) *= stats.std(c);
    Matrix g_xn = Matrix::Zero(xn.rows(), xn.cols());

    if (cfg_.variant == Variant::bypass) {
        const Matrix& lin = cache.at(--cursor);
        const Matrix& fits_out = cache.at(--cursor);
        Parameter& beta_p = params_[g.beta];
        const double beta = beta_p.value(0);
        beta_p.grad(0) += (g_yn.array() * (lin - fits_out).array()).sum();
        const Matrix g_lin = beta * g_yn;
        add_real_grad(params_[g.bypass_weight], xn * g_lin.transpose());
        g_xn.noalias() += real_matrix(params_[g.bypass_weight]) * g_lin;
        g_yn *= (1.0 - beta);
    }
    if (!g.time_layers.empty()) {
        Matrix gh = g_yn;
        for (std::size_t l = g.time_layers.size(); l-- > 0;) {
            const Layer& layer = g.time_layers[l];
            if (l + 1 < g.time_layers.size()) {
                const Matrix& pre = cache.at(--cursor);
                gh = relu_backward(pre, gh);
            }
            const Matrix& input = cache.at(--cursor);
            add_real_grad(params_[layer.weight], input * gh.transpose());
            params_[layer.bias].grad += gh.rowwise().sum();
            gh = real_matrix(params_[layer.weight]) * gh;
        }
        g_yn += gh;  // residual skip
    }

    SplitComplex g_up;
    synthesis_.inverse_adjoint(g_yn, g_up.re, g_up.im);
    const double eta = cfg_.eta();
    g_up.re *= eta;
    g_up.im *= eta;
    const SplitComplex g_spec = spectral_backward(cache, cursor, g_up, g);
    g_xn += analysis_.forward_adjoint(g_spec.re, g_spec.im);
    return normalize_backward(xn, yn, stats, g_xn, grad_out);
}

void FitsModel::after_step() {
    if (cfg_.variant != Variant::bypass) return;
    for (auto& g : groups_) {
        double& beta = params_[g.beta].value(0);
        beta = std::clamp(beta, 0.0, 1.0);
    }
}

nlohmann::json FitsModel::config_json() const { return cfg_.to_json(); }

ComplexMat FitsModel::frequency_weights(std::size_t group) const {
    const Parameter& p = params_[groups_.at(group).spectral_layers.front().weight];
    if (!p.is_complex) throw std::logic_error("frequency weights are real for this variant");
    const SplitComplex w = complex_matrix(p);
    ComplexMat out(w.re.rows(), w.re.cols());
    out.real() = w.re;
    out.imag() = w.im;
    return out;
}

void FitsModel::set_frequency_weights(const ComplexMat& w, std::size_t group) {
    Parameter& p = params_[groups_.at(group).spectral_layers.front().weight];
    if (!p.is_complex || w.rows() != p.rows || w.cols() != p.cols)
        throw std::invalid_argument("set_frequency_weights: shape mismatch");
    set_complex_matrix(p, w.real(), w.imag());
}

Matrix fits_forward(const FitsModel& model, const Matrix& window) {
    if (window.rows() != model.seq_len()) throw std::invalid_argument("fits_forward: window length mismatch");
    if (model.group_count() == 1) return model.forward(window, 0, nullptr);
    if (static_cast<std::size_t>(window.cols()) != model.group_count())
        throw std::invalid_argument("fits_forward: channel count does not match individual layers");
    Matrix out(model.output_len(), window.cols());
    for (Index c = 0; c < window.cols(); ++c)
        out.col(c) = model.forward(window.col(c), static_cast<std::size_t>(c), nullptr);
    return out;
}

Matrix downsample(const Matrix& window, Index factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be positive");
    if (window.rows() % factor != 0) throw std::invalid_argument("window length not divisible by downsample factor");
    Matrix out(window.rows() / factor, window.cols());
    for (Index i = 0; i < out.rows(); ++i) out.row(i) = window.row(i * factor);
    return out;
}

Matrix fits_reconstruct(const FitsModel& model, const Matrix& window, Index factor) {
    const Matrix small = downsample(window, factor);
    if (model.seq_len() != small.rows() || model.output_len() != window.rows())
        throw std::invalid_argument("fits_reconstruct: model must map N/factor samples to N");
    return fits_forward(model, small);
}

}  // namespace freqcast::fits
