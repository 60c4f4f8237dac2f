#pragma once

// Discrete Fourier transforms and simple frequency/time-domain filters.
//
// Conventions: the forward transform is unnormalized, the inverse carries 1/N.
// Power-of-two lengths use an iterative radix-2 Cooley-Tukey kernel; any other
// length goes through Bluestein's chirp-z reformulation on a power-of-two grid.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace freqcast::spectral {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Bins of a real-input transform together with the time-domain length that
/// produced them. For a real source, bins.size() == source_len / 2 + 1.
template <typename Scalar>
struct Spectrum {
    ComplexVector<Scalar> bins;
    Eigen::Index source_len = 0;
};

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const auto v = x(i);
        if constexpr (requires { v.real(); }) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::invalid_argument("non-finite sample at index " + std::to_string(i));
        } else {
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite sample at index " + std::to_string(i));
        }
    }
}

// In-place bit-reversal permutation followed by iterative butterflies.
// Unnormalized in both directions; `inverse` flips the twiddle sign.
template <typename Scalar>
void radix2_in_place(std::complex<Scalar>* a, std::size_t n, bool inverse) {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const Scalar sign = inverse ? Scalar(1) : Scalar(-1);
    // Twiddles for the largest stage; smaller stages stride through the table.
    std::vector<std::complex<Scalar>> roots(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const Scalar angle = sign * Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k) / Scalar(n);
        roots[k] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const std::complex<Scalar> even = a[start + k];
                const std::complex<Scalar> odd = a[start + k + half] * roots[k * stride];
                a[start + k] = even + odd;
                a[start + k + half] = even - odd;
            }
        }
    }
}

template <typename Scalar>
struct BluesteinPlan {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<std::complex<Scalar>> chirp;        // exp(-i pi k^2 / n)
    std::vector<std::complex<Scalar>> kernel_freq;  // FFT_m of conj(chirp) wrapped

    explicit BluesteinPlan(std::size_t len) : n(len), m(next_power_of_two(2 * len - 1)), chirp(len) {
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the angle argument small for long transforms.
            const std::size_t k2 = (k * k) % (2 * n);
            const Scalar angle = -std::numbers::pi_v<Scalar> * Scalar(k2) / Scalar(n);
            chirp[k] = {std::cos(angle), std::sin(angle)};
        }
        kernel_freq.assign(m, {});
        kernel_freq[0] = std::conj(chirp[0]);
        for (std::size_t k = 1; k < n; ++k) {
            kernel_freq[k] = std::conj(chirp[k]);
            kernel_freq[m - k] = std::conj(chirp[k]);
        }
        radix2_in_place(kernel_freq.data(), m, false);
    }

    void forward(std::complex<Scalar>* data) const {
        std::vector<std::complex<Scalar>> work(m);
        for (std::size_t k = 0; k < n; ++k) work[k] = data[k] * chirp[k];
        radix2_in_place(work.data(), m, false);
        for (std::size_t k = 0; k < m; ++k) work[k] *= kernel_freq[k];
        radix2_in_place(work.data(), m, true);
        const Scalar scale = Scalar(1) / Scalar(m);
        for (std::size_t k = 0; k < n; ++k) data[k] = work[k] * scale * chirp[k];
    }
};

template <typename Scalar>
const BluesteinPlan<Scalar>& bluestein_plan(std::size_t n) {
    thread_local std::map<std::size_t, BluesteinPlan<Scalar>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, BluesteinPlan<Scalar>(n)).first;
    return it->second;
}

template <typename Scalar>
void forward_in_place(std::complex<Scalar>* data, std::size_t n) {
    if (n <= 1) return;
    if (is_power_of_two(n)) {
        radix2_in_place(data, n, false);
    } else {
        bluestein_plan<Scalar>(n).forward(data);
    }
}

}  // namespace detail

/// Forward DFT, X_k = sum_n x_n exp(-2 pi i n k / N).
template <typename Scalar>
ComplexVector<Scalar> fft(const ComplexVector<Scalar>& x) {
    if (x.size() < 1) throw std::invalid_argument("fft: empty input");
    detail::require_finite(x);
    ComplexVector<Scalar> out = x;
    detail::forward_in_place(out.data(), static_cast<std::size_t>(out.size()));
    return out;
}

/// Inverse DFT including the 1/N factor.
template <typename Scalar>
ComplexVector<Scalar> ifft(const ComplexVector<Scalar>& spectrum) {
    if (spectrum.size() < 1) throw std::invalid_argument("ifft: empty input");
    detail::require_finite(spectrum);
    const auto n = static_cast<std::size_t>(spectrum.size());
    ComplexVector<Scalar> out = spectrum.conjugate();
    detail::forward_in_place(out.data(), n);
    return out.conjugate() / Scalar(n);
}

template <typename Scalar>
Spectrum<Scalar> rfft(const RealVector<Scalar>& x) {
    if (x.size() < 2) throw std::invalid_argument("rfft: input length must be at least 2");
    detail::require_finite(x);
    ComplexVector<Scalar> full = x.template cast<std::complex<Scalar>>();
    detail::forward_in_place(full.data(), static_cast<std::size_t>(full.size()));
    Spectrum<Scalar> s;
    s.source_len = x.size();
    s.bins = full.head(x.size() / 2 + 1);
    // Exact zeros where symmetry demands them.
    s.bins(0).imag(Scalar(0));
    if (x.size() % 2 == 0) s.bins(s.bins.size() - 1).imag(Scalar(0));
    return s;
}

/// Inverse real transform to `out_len` samples. Bins beyond the ones supplied
/// are treated as zero, which is zero-padded (band-limited) upsampling.
/// Imaginary parts of the DC and Nyquist bins do not contribute.
template <typename Scalar>
RealVector<Scalar> irfft(const Spectrum<Scalar>& spectrum, Eigen::Index out_len) {
    if (out_len < 1) throw std::invalid_argument("irfft: output length must be positive");
    const Eigen::Index max_bins = out_len / 2 + 1;
    if (spectrum.bins.size() > max_bins) throw std::invalid_argument("spectrum exceeds target length");
    detail::require_finite(spectrum.bins);
    ComplexVector<Scalar> full = ComplexVector<Scalar>::Zero(out_len);
    for (Eigen::Index k = 0; k < spectrum.bins.size(); ++k) {
        std::complex<Scalar> v = spectrum.bins(k);
        const bool self_conjugate = k == 0 || (out_len % 2 == 0 && k == out_len / 2);
        if (self_conjugate) {
            full(k) = {v.real(), Scalar(0)};
        } else {
            full(k) = v;
            full(out_len - k) = std::conj(v);
        }
    }
    return ifft<Scalar>(full).real();
}

/// Keeps bins [0, cutoff_bin] inclusive.
template <typename Scalar>
Spectrum<Scalar> low_pass(const Spectrum<Scalar>& spectrum, Eigen::Index cutoff_bin) {
    if (cutoff_bin < 0 || cutoff_bin > spectrum.bins.size() - 1)
        throw std::invalid_argument("low_pass: cutoff beyond spectrum");
    return {spectrum.bins.head(cutoff_bin + 1), spectrum.source_len};
}

/// Zeroes bins below cutoff_bin; length preserved. cutoff == bins.size()
/// yields an all-zero spectrum.
template <typename Scalar>
Spectrum<Scalar> high_pass(const Spectrum<Scalar>& spectrum, Eigen::Index cutoff_bin) {
    if (cutoff_bin < 0 || cutoff_bin > spectrum.bins.size())
        throw std::invalid_argument("high_pass: cutoff beyond spectrum");
    Spectrum<Scalar> out = spectrum;
    out.bins.head(cutoff_bin).setZero();
    return out;
}

/// Centered moving average with replicate padding of (kernel - 1) / 2 samples
/// on each side, so the output has the input's length.
template <typename Scalar>
RealVector<Scalar> moving_average(const RealVector<Scalar>& x, Eigen::Index kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("moving_average: kernel must be odd and positive");
    if (x.size() == 0) throw std::invalid_argument("moving_average: empty input");
    if (kernel > 2 * x.size() - 1) throw std::invalid_argument("moving_average: kernel longer than padded input");
    const Eigen::Index pad = (kernel - 1) / 2;
    const Eigen::Index n = x.size();
    RealVector<Scalar> padded(n + 2 * pad);
    padded.head(pad).setConstant(x(0));
    padded.segment(pad, n) = x;
    padded.tail(pad).setConstant(x(n - 1));
    RealVector<Scalar> out(n);
    Scalar window = padded.head(kernel).sum();
    out(0) = window / Scalar(kernel);
    for (Eigen::Index i = 1; i < n; ++i) {
        window += padded(i + kernel - 1) - padded(i - 1);
        out(i) = window / Scalar(kernel);
    }
    return out;
}

/// The moving average as a dense (n x n) operator; column j of the result is
/// the response to a unit impulse at j. Used where an explicit adjoint is needed.
template <typename Scalar>
RealMatrix<Scalar> moving_average_matrix(Eigen::Index n, Eigen::Index kernel) {
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("moving_average: kernel must be odd and positive");
    if (kernel > 2 * n - 1) throw std::invalid_argument("moving_average: kernel longer than padded input");
    const Eigen::Index pad = (kernel - 1) / 2;
    RealMatrix<Scalar> m = RealMatrix<Scalar>::Zero(n, n);
    const Scalar w = Scalar(1) / Scalar(kernel);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = i - pad; t <= i + pad; ++t) {
            const Eigen::Index src = std::clamp<Eigen::Index>(t, 0, n - 1);
            m(i, src) += w;
        }
    }
    return m;
}

/// Real DFT restricted to the first `bins` frequencies, as explicit matrices so
/// that a batch of columns is transformed by a single product. Split storage:
/// a spectrum batch is a pair (re, im), each bins x batch.
///
/// forward(x):  re = C x, im = S x          (C = cos, S = -sin)
/// inverse(re, im) to `len` samples applies the one-sided synthesis with the
/// 1/len factor and doubled interior bins; it matches irfft with the missing
/// high bins set to zero.
template <typename Scalar>
class RealDftBasis {
public:
    RealDftBasis() = default;

    RealDftBasis(Eigen::Index len, Eigen::Index bins) : len_(len), bins_(bins) {
        if (len < 1 || bins < 1 || bins > len / 2 + 1) throw std::invalid_argument("RealDftBasis: invalid bin count");
        analysis_cos_.resize(bins, len);
        analysis_sin_.resize(bins, len);
        synthesis_cos_.resize(len, bins);
        synthesis_sin_.resize(len, bins);
        for (Eigen::Index k = 0; k < bins; ++k) {
            const bool single = k == 0 || (len % 2 == 0 && k == len / 2);
            const Scalar weight = (single ? Scalar(1) : Scalar(2)) / Scalar(len);
            for (Eigen::Index t = 0; t < len; ++t) {
                // Reduce k*t mod len before scaling keeps the phase accurate.
                const Eigen::Index phase = (k * t) % len;
                const Scalar angle = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(phase) / Scalar(len);
                const Scalar c = std::cos(angle);
                const Scalar s = single ? Scalar(0) : std::sin(angle);
                analysis_cos_(k, t) = c;
                analysis_sin_(k, t) = -s;
                synthesis_cos_(t, k) = weight * c;
                synthesis_sin_(t, k) = -weight * s;
            }
        }
    }

    [[nodiscard]] Eigen::Index length() const { return len_; }
    [[nodiscard]] Eigen::Index bins() const { return bins_; }

    void forward(const RealMatrix<Scalar>& x, RealMatrix<Scalar>& re, RealMatrix<Scalar>& im) const {
        re.noalias() = analysis_cos_ * x;
        im.noalias() = analysis_sin_ * x;
    }

    /// Adjoint of forward: gradient w.r.t. x given gradients of (re, im).
    [[nodiscard]] RealMatrix<Scalar> forward_adjoint(const RealMatrix<Scalar>& grad_re,
                                                     const RealMatrix<Scalar>& grad_im) const {
        RealMatrix<Scalar> g = analysis_cos_.transpose() * grad_re;
        g.noalias() += analysis_sin_.transpose() * grad_im;
        return g;
    }

    [[nodiscard]] RealMatrix<Scalar> inverse(const RealMatrix<Scalar>& re, const RealMatrix<Scalar>& im) const {
        RealMatrix<Scalar> x = synthesis_cos_ * re;
        x.noalias() += synthesis_sin_ * im;
        return x;
    }

    void inverse_adjoint(const RealMatrix<Scalar>& grad_x, RealMatrix<Scalar>& grad_re,
                         RealMatrix<Scalar>& grad_im) const {
        grad_re.noalias() = synthesis_cos_.transpose() * grad_x;
        grad_im.noalias() = synthesis_sin_.transpose() * grad_x;
    }

private:
    Eigen::Index len_ = 0;
    Eigen::Index bins_ = 0;
    RealMatrix<Scalar> analysis_cos_;
    RealMatrix<Scalar> analysis_sin_;
    RealMatrix<Scalar> synthesis_cos_;
    RealMatrix<Scalar> synthesis_sin_;
};

}  // namespace freqcast::spectral
