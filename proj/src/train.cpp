#include "freqcast/train.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace freqcast::train {

void Adam::reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
}

void Adam::step(const std::vector<ParameterStore*>& stores, double lr) {
    std::size_t k = 0;
    std::size_t total = 0;
    for (auto* s : stores) total += s->size();
    if (m_.size() != total) {
        m_.clear();
        v_.clear();
        for (auto* s : stores)
            for (const auto& p : *s) {
                m_.push_back(Vector::Zero(p.value.size()));
                v_.push_back(Vector::Zero(p.value.size()));
            }
        t_ = 0;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, double(t_));
    const double c2 = 1.0 - std::pow(beta2_, double(t_));
    for (auto* s : stores) {
        for (auto& p : *s) {
            Vector& m = m_[k];
            Vector& v = v_[k];
            m = beta1_ * m + (1.0 - beta1_) * p.grad;
            v = beta2_ * v + (1.0 - beta2_) * p.grad.cwiseAbs2();
            p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
            ++k;
        }
    }
}

void TrainConfig::validate() const {
    if (max_epochs_combined < 0 || max_epochs_finetune < 0) throw std::invalid_argument("epochs must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(lr_reduce_factor > 0.0 && lr_reduce_factor < 1.0))
        throw std::invalid_argument("lr_reduce_factor must be in (0, 1)");
    if (lr_patience < 0 || early_stop_patience < 1) throw std::invalid_argument("invalid patience");
}

nlohmann::json TrainConfig::to_json() const {
    const char* st = stages == Stages::both ? "both" : stages == Stages::combined ? "combined" : "finetune";
    return {{"max_epochs_combined", max_epochs_combined},
            {"max_epochs_finetune", max_epochs_finetune},
            {"batch_size", batch_size},
            {"learning_rate", learning_rate},
            {"lr_reduce_factor", lr_reduce_factor},
            {"lr_patience", lr_patience},
            {"early_stop_patience", early_stop_patience},
            {"seed", seed},
            {"stages", st},
            {"max_val_windows", max_val_windows}};
}

nlohmann::json EpochRecord::to_json() const {
    return {{"stage", stage}, {"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss}, {"lr", lr}};
}

void History::write_jsonl(std::ostream& out) const {
    for (const auto& e : epochs) out << e.to_json().dump() << '\n';
}

namespace {

// Input-channel positions whose outputs are scored.
std::vector<Index> scored_positions(const data::WindowSet& w) {
    std::vector<Index> pos;
    for (Index t : w.target_channels()) {
        const auto& in = w.input_channels();
        const auto it = std::find(in.begin(), in.end(), t);
        pos.push_back(static_cast<Index>(it - in.begin()));
    }
    return pos;
}

struct Column {
    Index window;
    Index position;
};

// Columns of a batch split by parameter group, in a fixed order.
std::vector<std::vector<Column>> group_columns(const Forecaster& model, const data::WindowSet& w,
                                               const std::vector<Index>& indices) {
    const auto positions = scored_positions(w);
    const std::size_t groups = model.group_count();
    if (groups > 1 && groups != w.input_channels().size())
        throw std::invalid_argument("model has " + std::to_string(groups) + " channel groups but the data has " +
                                    std::to_string(w.input_channels().size()) + " input channels");
    std::vector<std::vector<Column>> cols(groups);
    for (Index i : indices)
        for (Index p : positions) cols[groups > 1 ? std::size_t(p) : 0].push_back({i, p});
    return cols;
}

Matrix gather_inputs(const data::WindowSet& w, const std::vector<Column>& cols) {
    const Matrix& v = w.values();
    const auto& in = w.input_channels();
    Matrix x(w.seq_len(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        x.col(Index(j)) = v.col(in[std::size_t(cols[j].position)]).segment(w.start() + cols[j].window, w.seq_len());
    return x;
}

// Truth rows aligned with the model output rows used by the objective.
Matrix gather_truth(const data::WindowSet& w, const std::vector<Column>& cols, bool with_backcast) {
    const Matrix& v = w.values();
    const auto& in = w.input_channels();
    const Index offset = with_backcast ? 0 : w.seq_len();
    const Index rows = with_backcast ? w.seq_len() + w.pred_len() : w.pred_len();
    Matrix y(rows, static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        y.col(Index(j)) =
            v.col(in[std::size_t(cols[j].position)]).segment(w.start() + cols[j].window + offset, rows);
    return y;
}

void check_model(const Forecaster& model, const data::WindowSet& w) {
    if (model.seq_len() != w.seq_len() || model.pred_len() != w.pred_len())
        throw std::invalid_argument("model lengths (" + std::to_string(model.seq_len()) + ", " +
                                    std::to_string(model.pred_len()) + ") do not match the windows (" +
                                    std::to_string(w.seq_len()) + ", " + std::to_string(w.pred_len()) + ")");
}

}  // namespace

std::vector<Index> spaced_subset(Index count, Index max_windows) {
    std::vector<Index> idx;
    if (max_windows <= 0 || max_windows >= count) {
        idx.resize(std::size_t(count));
        std::iota(idx.begin(), idx.end(), Index{0});
        return idx;
    }
    for (Index k = 0; k < max_windows; ++k) idx.push_back(k * count / max_windows);
    return idx;
}

double batch_loss(Forecaster& model, const data::WindowSet& windows, const std::vector<Index>& indices,
                  Objective objective, bool accumulate) {
    check_model(model, windows);
    if (indices.empty()) throw std::invalid_argument("batch_loss: empty batch");
    const bool combined = objective == Objective::combined;
    if (combined && !model.has_backcast()) throw std::invalid_argument("combined objective needs a backcast");
    const auto groups = group_columns(model, windows, indices);
    const Index rows = combined ? model.output_len() : model.pred_len();
    Index total = 0;
    for (const auto& g : groups) total += Index(g.size()) * rows;

    double sum = 0.0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& cols = groups[gi];
        if (cols.empty()) continue;
        const Matrix x = gather_inputs(windows, cols);
        const Matrix y = gather_truth(windows, cols, combined);
        ForwardCache cache;
        const Matrix out = model.forward(x, gi, accumulate ? &cache : nullptr);
        const Matrix diff = out.bottomRows(rows) - y;
        sum += diff.squaredNorm();
        if (accumulate) {
            Matrix grad = Matrix::Zero(out.rows(), out.cols());
            grad.bottomRows(rows) = diff * (2.0 / double(total));
            model.backward(cache, grad, gi);
        }
    }
    return sum / double(total);
}

double dataset_loss(Forecaster& model, const data::WindowSet& windows, Objective objective, Index max_windows) {
    const auto idx = spaced_subset(windows.size(), max_windows);
    constexpr std::size_t chunk = 256;
    double weighted = 0.0;
    for (std::size_t b = 0; b < idx.size(); b += chunk) {
        const std::vector<Index> part(idx.begin() + std::ptrdiff_t(b),
                                      idx.begin() + std::ptrdiff_t(std::min(idx.size(), b + chunk)));
        weighted += batch_loss(model, windows, part, objective, false) * double(part.size());
    }
    return weighted / double(idx.size());
}

namespace {

std::vector<std::vector<Vector>> snapshot(const std::vector<ParameterStore*>& stores) {
    std::vector<std::vector<Vector>> out;
    for (auto* s : stores) {
        std::vector<Vector> vals;
        for (const auto& p : *s) vals.push_back(p.value);
        out.push_back(std::move(vals));
    }
    return out;
}

void restore(const std::vector<ParameterStore*>& stores, const std::vector<std::vector<Vector>>& snap) {
    for (std::size_t i = 0; i < stores.size(); ++i) {
        std::size_t k = 0;
        for (auto& p : *stores[i]) p.value = snap[i][k++];
    }
}

}  // namespace

History train_two_stage(Forecaster& model, const data::WindowSet& train_set, const data::WindowSet& val_set,
                        const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    check_model(model, train_set);
    check_model(model, val_set);
    if (train_set.size() < 1 || val_set.size() < 1) throw std::invalid_argument("empty split");
    History hist;
    const auto stores = model.stores();
    if (model.param_count() == 0) return hist;

    struct StagePlan {
        const char* name;
        Objective objective;
        int epochs;
    };
    std::vector<StagePlan> plan;
    if (cfg.stages != Stages::finetune && model.has_backcast())
        plan.push_back({"combined", Objective::combined, cfg.max_epochs_combined});
    if (cfg.stages != Stages::combined) plan.push_back({"finetune", Objective::forecast, cfg.max_epochs_finetune});

    std::mt19937_64 rng(cfg.seed);
    std::vector<Index> order(static_cast<std::size_t>(train_set.size()));
    std::iota(order.begin(), order.end(), Index{0});

    for (const auto& stage : plan) {
        Adam adam;
        double lr = cfg.learning_rate;
        double best = std::numeric_limits<double>::infinity();
        auto best_weights = snapshot(stores);
        int since_best = 0;
        int since_lr = 0;
        for (int epoch = 1; epoch <= stage.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            model.set_training(true);
            double train_sum = 0.0;
            Index batches = 0;
            for (std::size_t b = 0; b < order.size(); b += std::size_t(cfg.batch_size)) {
                const std::vector<Index> batch(
                    order.begin() + std::ptrdiff_t(b),
                    order.begin() + std::ptrdiff_t(std::min(order.size(), b + std::size_t(cfg.batch_size))));
                model.zero_grad();
                const double loss = batch_loss(model, train_set, batch, stage.objective, true);
                if (!std::isfinite(loss))
                    throw std::runtime_error("non-finite loss in " + std::string(stage.name) + " epoch " +
                                             std::to_string(epoch) + ", batch " + std::to_string(batches));
                adam.step(stores, lr);
                model.after_step();
                train_sum += loss * double(batch.size());
                ++batches;
            }
            model.set_training(false);
            EpochRecord rec;
            rec.stage = stage.name;
            rec.epoch = epoch;
            rec.lr = lr;
            rec.train_loss = train_sum / double(order.size());
            rec.val_loss = dataset_loss(model, val_set, stage.objective, cfg.max_val_windows);
            if (rec.val_loss < best) {
                best = rec.val_loss;
                best_weights = snapshot(stores);
                rec.improved = true;
                since_best = 0;
                since_lr = 0;
            } else {
                ++since_best;
                ++since_lr;
            }
            hist.epochs.push_back(rec);
            if (log) *log << rec.to_json().dump() << '\n' << std::flush;
            if (since_lr > cfg.lr_patience) {
                lr *= cfg.lr_reduce_factor;
                since_lr = 0;
            }
            if (since_best >= cfg.early_stop_patience) break;
        }
        restore(stores, best_weights);
    }
    model.set_training(false);
    return hist;
}

nlohmann::json Metrics::to_json() const {
    return {{"mse", mse}, {"mae", mae}, {"se", se}, {"rrmse", rrmse}, {"n", n}};
}

void MetricAccumulator::add(const Matrix& prediction, const Matrix& truth) {
    if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols())
        throw std::invalid_argument("metrics: prediction/truth shape mismatch");
    if (prediction.rows() == 0) return;
    const Matrix diff = prediction - truth;
    sq_ += diff.squaredNorm();
    abs_ += diff.cwiseAbs().sum();
    abs_truth_ += truth.cwiseAbs().sum();
    n_ += diff.size();
    last_sq_ += diff.row(diff.rows() - 1).squaredNorm();
    last_n_ += diff.cols();
}

Metrics MetricAccumulator::result() const {
    if (n_ == 0) throw std::invalid_argument("metrics: nothing to evaluate");
    Metrics m;
    m.n = n_;
    m.mse = sq_ / double(n_);
    m.mae = abs_ / double(n_);
    m.se = last_sq_ / double(last_n_);
    const double mean_abs = abs_truth_ / double(n_);
    m.rrmse = mean_abs > 0.0 ? std::sqrt(m.mse) / mean_abs * 100.0 : std::numeric_limits<double>::infinity();
    return m;
}

Metrics compute_metrics(const std::vector<Matrix>& predictions, const std::vector<Matrix>& truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("metrics: count mismatch");
    MetricAccumulator acc;
    for (std::size_t i = 0; i < predictions.size(); ++i) acc.add(predictions[i], truths[i]);
    return acc.result();
}

Matrix predict(const Forecaster& model, const data::WindowSet& windows, Index i) {
    check_model(model, windows);
    const auto groups = group_columns(model, windows, {i});
    Matrix out(windows.pred_len(), Index(windows.target_channels().size()));
    Index col = 0;
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (groups[gi].empty()) continue;
        const Matrix y = model.forward(gather_inputs(windows, groups[gi]), gi, nullptr);
        for (Index j = 0; j < y.cols(); ++j) out.col(col++) = y.col(j).tail(windows.pred_len());
    }
    return out;
}

Metrics evaluate(const Forecaster& model, const data::WindowSet& windows, const std::vector<Index>& indices) {
    check_model(model, windows);
    const auto idx = indices.empty() ? spaced_subset(windows.size(), 0) : indices;
    MetricAccumulator acc;
    constexpr std::size_t chunk = 256;
    for (std::size_t b = 0; b < idx.size(); b += chunk) {
        const std::vector<Index> part(idx.begin() + std::ptrdiff_t(b),
                                      idx.begin() + std::ptrdiff_t(std::min(idx.size(), b + chunk)));
        const auto groups = group_columns(model, windows, part);
        // Per-window blocks, channels in scored order.
        std::vector<Matrix> preds(part.size(), Matrix(windows.pred_len(), Index(windows.target_channels().size())));
        const auto positions = scored_positions(windows);
        for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            const auto& cols = groups[gi];
            if (cols.empty()) continue;
            const Matrix y = model.forward(gather_inputs(windows, cols), gi, nullptr);
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const auto w = std::size_t(std::find(part.begin(), part.end(), cols[j].window) - part.begin());
                const auto c = std::find(positions.begin(), positions.end(), cols[j].position) - positions.begin();
                preds[w].col(c) = y.col(Index(j)).tail(windows.pred_len());
            }
        }
        for (std::size_t k = 0; k < part.size(); ++k) acc.add(preds[k], windows.target(part[k]));
    }
    return acc.result();
}

TTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_t_test: need two equal samples of size >= 2");
    const auto n = double(a.size());
    std::vector<double> d(a.size());
    bool all_tiny = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d[i] = a[i] - b[i];
        if (std::abs(d[i]) >= 1e-12) all_tiny = false;
    }
    TTest r;
    r.df = n - 1.0;
    if (all_tiny) return r;
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) {
        r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(n));
    const boost::math::students_t dist(r.df);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

nlohmann::json SeedStudy::to_json() const {
    return {{"a", a},           {"b", b},           {"mean_a", mean_a},     {"std_a", std_a},
            {"mean_b", mean_b}, {"std_b", std_b},   {"t", test.t},          {"df", test.df},
            {"p_value", test.p_value}};
}

SeedStudy seed_study(const std::function<double(std::uint64_t)>& run_a,
                     const std::function<double(std::uint64_t)>& run_b, int n_seeds) {
    if (n_seeds < 2) throw std::invalid_argument("seed_study: need at least two seeds");
    SeedStudy s;
    for (int i = 0; i < n_seeds; ++i) {
        s.a.push_back(run_a(std::uint64_t(i)));
        s.b.push_back(run_b(std::uint64_t(i)));
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / double(v.size() - 1));
    };
    stats(s.a, s.mean_a, s.std_a);
    stats(s.b, s.mean_b, s.std_b);
    s.test = paired_t_test(s.a, s.b);
    return s;
}

double fit_pairs(Forecaster& model, const std::vector<Matrix>& inputs, const std::vector<Matrix>& targets,
                 const PairFitConfig& cfg, std::size_t group) {
    if (inputs.empty() || inputs.size() != targets.size()) throw std::invalid_argument("fit_pairs: bad data");
    Index cols = 0;
    for (const auto& m : inputs) cols += m.cols();
    Matrix x(inputs.front().rows(), cols);
    Matrix y(targets.front().rows(), cols);
    Index c = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        x.middleCols(c, inputs[i].cols()) = inputs[i];
        y.middleCols(c, targets[i].cols()) = targets[i];
        c += inputs[i].cols();
    }
    if (y.rows() != model.output_len()) throw std::invalid_argument("fit_pairs: target rows must equal output_len");
    const Index batch = cfg.batch_size ? std::min(*cfg.batch_size, cols) : cols;
    std::mt19937_64 rng(cfg.seed);
    std::vector<Index> order(static_cast<std::size_t>(cols));
    std::iota(order.begin(), order.end(), Index{0});
    Adam adam;
    const auto stores = model.stores();
    model.set_training(true);
    for (int e = 0; e < cfg.epochs; ++e) {
        if (batch < cols) std::shuffle(order.begin(), order.end(), rng);
        for (Index b = 0; b < cols; b += batch) {
            const Index n = std::min(batch, cols - b);
            std::vector<Index> sel(order.begin() + b, order.begin() + b + n);
            const Matrix xb = x(Eigen::all, sel);
            const Matrix yb = y(Eigen::all, sel);
            ForwardCache cache;
            model.zero_grad();
            const Matrix out = model.forward(xb, group, &cache);
            const Matrix diff = out - yb;
            model.backward(cache, diff * (2.0 / double(diff.size())), group);
            adam.step(stores, cfg.learning_rate);
            model.after_step();
        }
    }
    model.set_training(false);
    const Matrix diff = model.forward(x, group, nullptr) - y;
    return diff.squaredNorm() / double(diff.size());
}

}  // namespace freqcast::train
