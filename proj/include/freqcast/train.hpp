#pragma once

// Optimizer, two-stage training loop, evaluation metrics and the seed study.

#include "freqcast/data.hpp"
#include "freqcast/model.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace freqcast::train {

/// Adam with bias correction.
class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<ParameterStore*>& stores, double lr);
    void reset();

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Vector> m_, v_;
};

enum class Stages { both, combined, finetune };

struct TrainConfig {
    int max_epochs_combined = 50;
    int max_epochs_finetune = 50;
    Index batch_size = 64;
    double learning_rate = 5e-4;
    double lr_reduce_factor = 0.5;
    int lr_patience = 3;
    int early_stop_patience = 10;
    std::uint64_t seed = 0;
    Stages stages = Stages::both;
    /// Evaluate at most this many validation windows (evenly spaced); 0 = all.
    Index max_val_windows = 0;

    void validate() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct EpochRecord {
    std::string stage;  // "combined" or "finetune"
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
    bool improved = false;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct History {
    std::vector<EpochRecord> epochs;
    /// One JSON object per line.
    void write_jsonl(std::ostream& out) const;
};

/// Which part of the model output the loss covers.
enum class Objective {
    combined,  // backcast + forecast (models with a backcast only)
    forecast,
};

/// Mean squared error of the model on windows `indices` and, when `accumulate`
/// is set, parameter gradients of that mean (added to the stores' grads).
/// Columns follow the window set's target channels; in individual mode the
/// group of a column is its channel position.
double batch_loss(Forecaster& model, const data::WindowSet& windows, const std::vector<Index>& indices,
                  Objective objective, bool accumulate);

/// `max_windows` evenly spaced indices out of `count` (all when 0).
std::vector<Index> spaced_subset(Index count, Index max_windows);

/// Loss over a whole set without gradients, in fixed-size chunks.
double dataset_loss(Forecaster& model, const data::WindowSet& windows, Objective objective, Index max_windows = 0);

/// Stage 1 (combined) only runs for models with a backcast. After every
/// epoch the validation loss of the stage objective drives LR reduction and
/// early stopping; each stage ends by restoring its best-validation weights.
History train_two_stage(Forecaster& model, const data::WindowSet& train_set, const data::WindowSet& val_set,
                        const TrainConfig& cfg, std::ostream* log = nullptr);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    double se = 0.0;     // squared error at the final horizon step
    double rrmse = 0.0;  // percent
    Index n = 0;         // number of forecast values compared

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Accumulates forecasts and truths (pred_len x channels blocks).
class MetricAccumulator {
public:
    void add(const Matrix& prediction, const Matrix& truth);
    [[nodiscard]] Metrics result() const;

private:
    double sq_ = 0.0, abs_ = 0.0, abs_truth_ = 0.0, last_sq_ = 0.0;
    Index n_ = 0, last_n_ = 0;
};

Metrics compute_metrics(const std::vector<Matrix>& predictions, const std::vector<Matrix>& truths);

/// Forecasts of the model over `indices` (all windows when empty), compared
/// against the target channels.
Metrics evaluate(const Forecaster& model, const data::WindowSet& windows, const std::vector<Index>& indices = {});

/// Horizon forecast for one window: pred_len x target channels.
Matrix predict(const Forecaster& model, const data::WindowSet& windows, Index i);

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

/// Two-sided paired t-test of a against b. p = 1 when every difference is
/// below 1e-12 in magnitude.
TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct SeedStudy {
    std::vector<double> a, b;
    double mean_a = 0.0, std_a = 0.0, mean_b = 0.0, std_b = 0.0;
    TTest test;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// run(seed) returns a score (test MSE) for seeds 0..n-1 of each spec.
SeedStudy seed_study(const std::function<double(std::uint64_t)>& run_a,
                     const std::function<double(std::uint64_t)>& run_b, int n_seeds);

struct PairFitConfig {
    int epochs = 500;
    double learning_rate = 1e-2;
    std::optional<Index> batch_size;  // full batch when empty
    std::uint64_t seed = 0;
};

/// Direct regression of model(input_i) onto target_i (full output rows) with
/// Adam; for synthetic studies such as reconstruction. Returns the final loss.
double fit_pairs(Forecaster& model, const std::vector<Matrix>& inputs, const std::vector<Matrix>& targets,
                 const PairFitConfig& cfg, std::size_t group = 0);

}  // namespace freqcast::train
