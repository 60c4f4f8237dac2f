#pragma once

// Naive baselines and ARIMA fitted by conditional sum of squares.
//
// Sign convention for the ARMA part, with w the d-times differenced series and
// w~ = w - mu:
//     w~_t = phi_1 w~_{t-1} + ... + phi_p w~_{t-p} + e_t - theta_1 e_{t-1} - ... - theta_q e_{t-q}

#include "freqcast/model.hpp"

#include <stdexcept>

namespace freqcast::classical {

struct ArimaModel {
    int p = 0, d = 0, q = 0;
    double mu = 0.0;  // mean of the differenced series
    Vector phi;
    Vector theta;
    double sigma2 = 1.0;
    double loglik = 0.0;  // at the fitted parameters

    [[nodiscard]] int k() const { return p + q + 2; }
    [[nodiscard]] double aic() const { return 2.0 * k() - 2.0 * loglik; }
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Raised when the simplex search stops at the iteration cap; carries the
/// best model seen.
class ArimaFitError : public std::runtime_error {
public:
    ArimaFitError(const std::string& what, ArimaModel best) : std::runtime_error(what), best_(std::move(best)) {}
    [[nodiscard]] const ArimaModel& best() const { return best_; }

private:
    ArimaModel best_;
};

Vector difference(const Vector& x, int d);

/// Inverse of difference. `anchors` are the d original values that precede
/// the differenced span; returns anchors followed by the integrated values.
Vector undifference(const Vector& dx, const Vector& anchors);

/// AR(p) by least squares on the lagged design, conditioning on the first p
/// values. sigma2 = RSS / (T - p).
ArimaModel fit_ar(const Vector& x, int p);

/// Residuals e_t for t >= p of the (already differenced) series; presample
/// errors are zero.
Vector css_residuals(const Vector& w, const ArimaModel& m);

/// Conditional log-likelihood of x under m (x is differenced m.d times first).
double css_loglik(const Vector& x, const ArimaModel& m);

/// Spectral radius of the companion matrix of 1 - c_1 B - ... - c_n B^n.
/// Below one means all roots lie outside the unit circle.
double companion_radius(const Vector& coeffs);

/// True when an AR inverse root and an MA inverse root lie within `tol` of
/// each other, i.e. the ARMA polynomials nearly share a factor.
bool has_common_factor(const ArimaModel& m, double tol);

struct ArmaFitOptions {
    int max_iterations = 2000;
    double tolerance = 1e-8;
    int restarts = 3;
    std::uint64_t seed = 0;
};

/// ARMA(p, q) on x as given (d = 0) maximizing the CSS likelihood over
/// (mu, phi, theta) with sigma2 profiled out.
ArimaModel fit_arma(const Vector& x, int p, int q, const ArmaFitOptions& opt = {});

/// Differences d times, then fit_arma. For d > 0 mu is held at zero, so
/// ARIMA(0,1,0) is the random walk.
ArimaModel fit_arima(const Vector& x, int p, int d, int q, const ArmaFitOptions& opt = {});

/// Iterates the recursion with future errors at zero, then integrates.
Vector arima_forecast(const ArimaModel& m, const Vector& history, Index horizon);

struct AutoArimaOptions {
    int max_p = 3, max_d = 2, max_q = 3;
    /// Candidates whose AR and MA parts nearly cancel are skipped.
    double common_root_tol = 0.1;
    ArmaFitOptions fit;
};

/// Minimum-AIC order over the grid; ties keep the smaller (earlier) order.
/// Every candidate is scored on the same observations (those after the first
/// max_p + max_d), since CSS sums over a span that shrinks with p and d.
ArimaModel auto_arima(const Vector& x, const AutoArimaOptions& opt = {});

Vector repeat_forecast(const Vector& x, Index horizon);
Vector mean_forecast(const Vector& x, Index horizon);

/// Parameter-free forecaster: last value or window mean repeated.
class NaiveModel final : public Forecaster {
public:
    enum class Rule { repeat, mean };
    NaiveModel(Rule rule, Index seq_len, Index pred_len) : rule_(rule), seq_len_(seq_len), pred_len_(pred_len) {}

    [[nodiscard]] std::string kind() const override { return rule_ == Rule::repeat ? "repeat" : "mean"; }
    [[nodiscard]] Index seq_len() const override { return seq_len_; }
    [[nodiscard]] Index pred_len() const override { return pred_len_; }
    [[nodiscard]] bool has_backcast() const override { return false; }
    Matrix forward(const Matrix& x, std::size_t group, ForwardCache* cache) const override;
    Matrix backward(const ForwardCache& cache, const Matrix& grad_out, std::size_t group) override;
    [[nodiscard]] nlohmann::json config_json() const override {
        return {{"seq_len", seq_len_}, {"pred_len", pred_len_}};
    }

private:
    Rule rule_;
    Index seq_len_, pred_len_;
};

}  // namespace freqcast::classical
