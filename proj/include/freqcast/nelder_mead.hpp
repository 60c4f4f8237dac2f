#pragma once

// Derivative-free simplex minimization with restarts from perturbed optima.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <random>
#include <vector>

namespace freqcast {

struct NelderMeadOptions {
    double initial_step = 0.1;   // per-coordinate offset of the starting simplex
    double tolerance = 1e-8;     // simplex diameter (max-norm from best vertex)
    int max_iterations = 2000;   // per run
    int restarts = 3;
    double restart_scale = 0.05;
    std::uint64_t seed = 0;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;  // summed over runs
    bool converged = false;
    /// Best value after every iteration of every run, in order. Non-increasing.
    std::vector<double> best_history;
};

namespace detail {

struct SimplexRun {
    Eigen::VectorXd x;
    double value;
    int iterations;
    bool converged;
};

inline SimplexRun simplex_run(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                              const NelderMeadOptions& opt, std::vector<double>& history, double prior_best) {
    const Eigen::Index n = x0.size();
    std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(n + 1), x0);
    std::vector<double> fv(static_cast<std::size_t>(n + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double step = x0(i) != 0.0 ? opt.initial_step * std::max(1.0, std::abs(x0(i))) : opt.initial_step;
        v[static_cast<std::size_t>(i + 1)](i) += step;
    }
    for (std::size_t i = 0; i < v.size(); ++i) fv[i] = f(v[i]);

    std::vector<std::size_t> order(v.size());
    auto sort_vertices = [&] {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    };

    int it = 0;
    bool converged = false;
    while (true) {
        sort_vertices();
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];
        history.push_back(std::min(prior_best, fv[best]));

        double diameter = 0.0;
        for (const auto& vi : v) diameter = std::max(diameter, (vi - v[best]).cwiseAbs().maxCoeff());
        if (diameter < opt.tolerance) {
            converged = true;
            break;
        }
        if (it >= opt.max_iterations) break;
        ++it;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (i != worst) centroid += v[i];
        centroid /= double(n);

        const Eigen::VectorXd xr = centroid + (centroid - v[worst]);
        const double fr = f(xr);
        if (fr < fv[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - v[worst]);
            const double fe = f(xe);
            if (fe < fr) {
                v[worst] = xe;
                fv[worst] = fe;
            } else {
                v[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            v[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        // Contraction: outside if the reflection beat the worst, else inside.
        const bool outside = fr < fv[worst];
        const Eigen::VectorXd xc =
            outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid)) : Eigen::VectorXd(centroid + 0.5 * (v[worst] - centroid));
        const double fc = f(xc);
        if (fc < (outside ? fr : fv[worst])) {
            v[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i == best) continue;
            v[i] = v[best] + 0.5 * (v[i] - v[best]);
            fv[i] = f(v[i]);
        }
    }
    sort_vertices();
    return {v[order.front()], fv[order.front()], it, converged};
}

}  // namespace detail

inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
    NelderMeadResult res;
    auto run = detail::simplex_run(f, x0, opt, res.best_history, std::numeric_limits<double>::infinity());
    res.x = run.x;
    res.value = run.value;
    res.iterations = run.iterations;
    res.converged = run.converged;

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 0; r < opt.restarts; ++r) {
        Eigen::VectorXd start = res.x;
        for (Eigen::Index i = 0; i < start.size(); ++i)
            start(i) += opt.restart_scale * std::max(1.0, std::abs(start(i))) * gauss(rng);
        auto again = detail::simplex_run(f, start, opt, res.best_history, res.value);
        res.iterations += again.iterations;
        if (again.value < res.value) {
            res.x = again.x;
            res.value = again.value;
            res.converged = again.converged;
        }
    }
    return res;
}

}  // namespace freqcast
