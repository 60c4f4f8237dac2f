#include "freqcast/classical.hpp"

#include "freqcast/nelder_mead.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

namespace freqcast::classical {

nlohmann::json ArimaModel::to_json() const {
    return {{"p", p},
            {"d", d},
            {"q", q},
            {"mu", mu},
            {"phi", std::vector<double>(phi.data(), phi.data() + phi.size())},
            {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())},
            {"sigma2", sigma2},
            {"loglik", loglik},
            {"aic", aic()}};
}

Vector difference(const Vector& x, int d) {
    if (d < 0) throw std::invalid_argument("difference: order must be non-negative");
    if (x.size() < d) throw std::invalid_argument("difference: series shorter than order");
    Vector out = x;
    for (int i = 0; i < d; ++i) out = (out.tail(out.size() - 1) - out.head(out.size() - 1)).eval();
    return out;
}

Vector undifference(const Vector& dx, const Vector& anchors) {
    const auto d = static_cast<int>(anchors.size());
    // Last value of each difference level of the anchors seeds that level.
    std::vector<double> heads(static_cast<std::size_t>(d));
    Vector level = anchors;
    for (int k = 0; k < d; ++k) {
        heads[static_cast<std::size_t>(k)] = level(level.size() - 1);
        if (level.size() > 1) level = (level.tail(level.size() - 1) - level.head(level.size() - 1)).eval();
    }
    Vector s = dx;
    for (int k = d - 1; k >= 0; --k) {
        double acc = heads[static_cast<std::size_t>(k)];
        for (Index i = 0; i < s.size(); ++i) {
            acc += s(i);
            s(i) = acc;
        }
    }
    Vector out(anchors.size() + s.size());
    out << anchors, s;
    return out;
}

ArimaModel fit_ar(const Vector& x, int p) {
    if (p < 0) throw std::invalid_argument("fit_ar: order must be non-negative");
    const Index n = x.size();
    if (n < 2 || n <= 10 * p) throw std::invalid_argument("fit_ar: series too short for order " + std::to_string(p));
    ArimaModel m;
    m.p = p;
    m.theta = Vector();
    if (p == 0) {
        m.phi = Vector();
        m.mu = x.mean();
        m.sigma2 = (x.array() - m.mu).square().mean();
        m.loglik = css_loglik(x, m);
        return m;
    }
    const Index rows = n - p;
    Matrix design(rows, p + 1);
    Vector target = x.tail(rows);
    design.col(0).setOnes();
    for (int i = 1; i <= p; ++i) design.col(i) = x.segment(p - i, rows);
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < p + 1) throw std::runtime_error("degenerate regression");
    const Vector beta = qr.solve(target);
    m.phi = beta.tail(p);
    const double s = m.phi.sum();
    if (std::abs(1.0 - s) < 1e-12) throw std::runtime_error("degenerate regression");
    m.mu = beta(0) / (1.0 - s);
    const Vector resid = target - design * beta;
    m.sigma2 = resid.squaredNorm() / double(rows);
    m.loglik = css_loglik(x, m);
    return m;
}

Vector css_residuals(const Vector& w, const ArimaModel& m) {
    const Index n = w.size();
    const Index p = m.p;
    const Index q = m.q;
    Vector e = Vector::Zero(n);
    for (Index t = p; t < n; ++t) {
        double v = w(t) - m.mu;
        for (Index i = 1; i <= p; ++i) v -= m.phi(i - 1) * (w(t - i) - m.mu);
        for (Index j = 1; j <= q && t - j >= 0; ++j) v += m.theta(j - 1) * e(t - j);
        e(t) = v;
    }
    return e.tail(n - p);
}

double css_loglik(const Vector& x, const ArimaModel& m) {
    const Vector w = difference(x, m.d);
    if (w.size() <= m.p) throw std::invalid_argument("css_loglik: series shorter than AR order");
    const Vector e = css_residuals(w, m);
    const double n = double(e.size());
    return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(m.sigma2) -
           e.squaredNorm() / (2.0 * m.sigma2);
}

namespace {

// Inverse roots of 1 - c_1 B - ... - c_n B^n (eigenvalues of the companion matrix).
Eigen::VectorXcd inverse_roots(const Vector& coeffs) {
    const Index n = coeffs.size();
    if (n == 0) return {};
    if (n == 1) return Eigen::VectorXcd::Constant(1, coeffs(0));
    Matrix c = Matrix::Zero(n, n);
    c.row(0) = coeffs.transpose();
    c.bottomLeftCorner(n - 1, n - 1).setIdentity();
    Eigen::EigenSolver<Matrix> es(c, false);
    return es.eigenvalues();
}

}  // namespace

double companion_radius(const Vector& coeffs) {
    if (coeffs.size() == 0) return 0.0;
    return inverse_roots(coeffs).cwiseAbs().maxCoeff();
}

bool has_common_factor(const ArimaModel& m, double tol) {
    const auto a = inverse_roots(m.phi), b = inverse_roots(m.theta);
    for (Index i = 0; i < a.size(); ++i)
        for (Index j = 0; j < b.size(); ++j)
            if (std::abs(a(i) - b(j)) < tol) return true;
    return false;
}

namespace {

constexpr double kPenalty = 1e6;
constexpr double kRootMargin = 0.999;
constexpr double kInfeasible = 1e300;

ArimaModel unpack(const Vector& theta_vec, int p, int q, bool with_mean) {
    ArimaModel m;
    m.p = p;
    m.q = q;
    Index k = 0;
    m.mu = with_mean ? theta_vec(k++) : 0.0;
    m.phi = theta_vec.segment(k, p);
    k += p;
    m.theta = theta_vec.segment(k, q);
    return m;
}

ArimaModel fit_arma_impl(const Vector& w, int p, int q, bool with_mean, const ArmaFitOptions& opt) {
    if (p < 0 || q < 0) throw std::invalid_argument("fit_arma: orders must be non-negative");
    const Index n = w.size();
    if (n <= 10 * (p + q + 1))
        throw std::invalid_argument("fit_arma: series too short for orders (" + std::to_string(p) + "," +
                                    std::to_string(q) + ")");
    if (!w.allFinite()) throw std::invalid_argument("fit_arma: non-finite sample");

    if (p == 0 && q == 0) {
        ArimaModel m;
        m.mu = with_mean ? w.mean() : 0.0;
        m.sigma2 = (w.array() - m.mu).square().mean();
        if (m.sigma2 <= 0.0) throw std::runtime_error("degenerate regression");
        m.phi = Vector();
        m.theta = Vector();
        m.loglik = css_loglik(w, m);
        return m;
    }

    auto objective = [&](const Vector& v) {
        const ArimaModel m = unpack(v, p, q, with_mean);
        const Vector e = css_residuals(w, m);
        const double rss = e.squaredNorm();
        if (!std::isfinite(rss) || rss <= 0.0) return kInfeasible;
        const double len = double(e.size());
        const double ll = -0.5 * len * (std::log(2.0 * std::numbers::pi) + std::log(rss / len) + 1.0);
        const double violation = std::max(0.0, companion_radius(m.phi) - kRootMargin) +
                                 std::max(0.0, companion_radius(m.theta) - kRootMargin);
        return -ll + kPenalty * violation;
    };

    Vector x0 = Vector::Zero((with_mean ? 1 : 0) + p + q);
    if (with_mean) x0(0) = w.mean();
    if (p > 0) {
        try {
            const ArimaModel ar = fit_ar(w, p);
            if (companion_radius(ar.phi) < kRootMargin) x0.segment(with_mean ? 1 : 0, p) = ar.phi;
        } catch (const std::exception&) {
            // keep the zero start
        }
    }

    NelderMeadOptions nm;
    nm.max_iterations = opt.max_iterations;
    nm.tolerance = opt.tolerance;
    nm.restarts = opt.restarts;
    nm.seed = opt.seed;
    const NelderMeadResult res = nelder_mead(objective, x0, nm);

    ArimaModel m = unpack(res.x, p, q, with_mean);
    const Vector e = css_residuals(w, m);
    m.sigma2 = e.squaredNorm() / double(e.size());
    m.loglik = css_loglik(w, m);
    if (!res.converged)
        throw ArimaFitError("fit_arma: simplex search did not converge within " +
                                std::to_string(opt.max_iterations) + " iterations",
                            m);
    return m;
}

}  // namespace

ArimaModel fit_arma(const Vector& x, int p, int q, const ArmaFitOptions& opt) {
    return fit_arma_impl(x, p, q, true, opt);
}

ArimaModel fit_arima(const Vector& x, int p, int d, int q, const ArmaFitOptions& opt) {
    const Vector w = difference(x, d);
    auto finish = [&](ArimaModel m) {
        m.d = d;
        m.loglik = css_loglik(x, m);
        return m;
    };
    try {
        return finish(fit_arma_impl(w, p, q, d == 0, opt));
    } catch (const ArimaFitError& err) {
        throw ArimaFitError(err.what(), finish(err.best()));
    }
}

Vector arima_forecast(const ArimaModel& m, const Vector& history, Index horizon) {
    if (horizon < 1) throw std::invalid_argument("arima_forecast: horizon must be positive");
    const Vector w = difference(history, m.d);
    if (w.size() < std::max(m.p, 1)) throw std::invalid_argument("arima_forecast: history too short");
    const Vector e_tail = css_residuals(w, m);
    const Index n = w.size();
    Vector e = Vector::Zero(n + horizon);
    e.segment(m.p, n - m.p) = e_tail;
    Vector z(n + horizon);
    z.head(n) = w.array() - m.mu;
    for (Index t = n; t < n + horizon; ++t) {
        double v = 0.0;
        for (Index i = 1; i <= m.p; ++i) v += m.phi(i - 1) * z(t - i);
        for (Index j = 1; j <= m.q; ++j) v -= m.theta(j - 1) * e(t - j);
        z(t) = v;
    }
    const Vector future = z.tail(horizon).array() + m.mu;
    if (m.d == 0) return future;
    const Vector anchors = history.tail(m.d);
    return undifference(future, anchors).tail(horizon);
}

namespace {

// CSS log-likelihood restricted to residuals at original indices >= start, so
// that candidates with different (p, d) are scored on the same observations.
// sigma2 is re-profiled over those terms.
double common_loglik(const Vector& x, const ArimaModel& m, Index start) {
    const Vector w = difference(x, m.d);
    const Vector e = css_residuals(w, m);  // e(i) belongs to w index p + i, x index p + i + d
    const Index skip = std::max<Index>(0, start - m.p - m.d);
    const Index n = e.size() - skip;
    if (n <= 0) return -std::numeric_limits<double>::infinity();
    const double ss = e.tail(n).squaredNorm();
    const double s2 = std::max(ss / double(n), 1e-300);
    return -0.5 * double(n) * (std::log(2.0 * std::numbers::pi) + std::log(s2) + 1.0);
}

}  // namespace

ArimaModel auto_arima(const Vector& x, const AutoArimaOptions& opt) {
    ArimaModel best;
    double best_score = 0.0;
    bool have = false;
    const Index start = opt.max_p + opt.max_d;
    for (int d = 0; d <= opt.max_d; ++d) {
        for (int p = 0; p <= opt.max_p; ++p) {
            for (int q = 0; q <= opt.max_q; ++q) {
                if (x.size() - d <= 10 * (p + q + 1)) continue;
                ArimaModel m;
                try {
                    m = fit_arima(x, p, d, q, opt.fit);
                } catch (const ArimaFitError& err) {
                    m = err.best();
                } catch (const std::exception&) {
                    continue;
                }
                if (!std::isfinite(m.loglik)) continue;
                // redundant: the reduced order is also on the grid
                if (has_common_factor(m, opt.common_root_tol)) continue;
                const double score = 2.0 * m.k() - 2.0 * common_loglik(x, m, start);
                if (!std::isfinite(score)) continue;
                if (!have || score < best_score) {
                    best = m;
                    best_score = score;
                    have = true;
                }
            }
        }
    }
    if (!have) throw std::runtime_error("auto_arima: no order could be fitted");
    return best;
}

Vector repeat_forecast(const Vector& x, Index horizon) {
    if (x.size() == 0) throw std::invalid_argument("repeat_forecast: empty window");
    return Vector::Constant(horizon, x(x.size() - 1));
}

Vector mean_forecast(const Vector& x, Index horizon) {
    if (x.size() == 0) throw std::invalid_argument("mean_forecast: empty window");
    return Vector::Constant(horizon, x.mean());
}

Matrix NaiveModel::forward(const Matrix& x, std::size_t, ForwardCache* cache) const {
    if (x.rows() != seq_len_) throw std::invalid_argument("naive: window length mismatch");
    if (cache) cache->clear();
    Matrix y(pred_len_, x.cols());
    for (Index c = 0; c < x.cols(); ++c)
        y.col(c).setConstant(rule_ == Rule::repeat ? x(seq_len_ - 1, c) : x.col(c).mean());
    return y;
}

Matrix NaiveModel::backward(const ForwardCache&, const Matrix& grad_out, std::size_t) {
    Matrix g = Matrix::Zero(seq_len_, grad_out.cols());
    if (rule_ == Rule::repeat)
        g.row(seq_len_ - 1) = grad_out.colwise().sum();
    else
        g.rowwise() = grad_out.colwise().sum() / double(seq_len_);
    return g;
}

}  // namespace freqcast::classical
