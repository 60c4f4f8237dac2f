#include "freqcast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace freqcast::experiment {

bool uses_fits(const std::string& model) { return model == "fits" || model == "dlinear_fits" || model == "fits_dlinear"; }

void RunSpec::validate() const {
    const auto& kinds = model_kinds();
    if (model != "arima" && std::find(kinds.begin(), kinds.end(), model) == kinds.end())
        make_model(model, nlohmann::json::object());  // throws with the known kinds
    if (mode == data::Mode::S && fits.channel_mode == fits::ChannelMode::individual)
        throw std::invalid_argument("individual channel layers need more than one channel; use --mode M or MS");
    if (subsample < 0) throw std::invalid_argument("subsample must be non-negative");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("kernel must be odd and positive");
    if (uses_fits(model)) {
        fits.validate();
    } else if (fits.seq_len < 2 || fits.pred_len < 1) {
        throw std::invalid_argument("seq_len must be at least 2 and pred_len positive");
    }
    train.validate();
}

nlohmann::json RunSpec::to_json() const {
    return {{"dataset", dataset},
            {"model", model},
            {"mode", data::to_string(mode)},
            {"fits", fits.to_json()},
            {"kernel", kernel},
            {"sentinel", sentinel},
            {"train", train.to_json()},
            {"subsample", subsample},
            {"arima", {{"max_p", arima.max_p}, {"max_d", arima.max_d}, {"max_q", arima.max_q}}}};
}

RunSpec spec_from_preset(const DatasetPreset& preset, const std::string& model, Index horizon) {
    RunSpec s;
    s.dataset = preset.name;
    s.model = model;
    s.mode = data::Mode::M;
    s.fits.seq_len = preset.seq_len;
    s.fits.pred_len = horizon;
    s.fits.base_period = preset.base_period;
    s.fits.harmonic_order = preset.harmonic_order;
    s.fits.channel_mode = preset.channel_mode;
    s.split = preset.split;
    s.sentinel = preset.sentinel;
    return s;
}

Prepared prepare(const data::SeriesFrame& frame, const RunSpec& spec) {
    const auto cleaned = data::clean_sentinels(frame, spec.sentinel);
    auto st = data::standardize(data::split(cleaned, spec.split));
    const auto& b = st.splits.bounds;
    Matrix all(b.total, cleaned.channels());
    all << st.splits.train.values, st.splits.val.values, st.splits.test.values;
    auto values = std::make_shared<const Matrix>(std::move(all));
    const Index target = cleaned.target_index();
    const Index seq = spec.fits.seq_len, pred = spec.fits.pred_len;
    auto train = data::make_windows(values, 0, b.train_end, seq, pred, spec.mode, target);
    auto val = data::make_windows(values, b.train_end, b.val_end, seq, pred, spec.mode, target);
    auto test = data::make_windows(values, b.val_end, b.total, seq, pred, spec.mode, target);
    return {std::move(st), values, std::move(train), std::move(val), std::move(test)};
}

nlohmann::json RunRecord::to_json() const {
    return {{"dataset", dataset},
            {"model", model},
            {"mode", mode},
            {"seq_len", seq_len},
            {"pred_len", pred_len},
            {"base_T", base_period},
            {"H_order", harmonic_order},
            {"cutoff", cutoff},
            {"seed", seed},
            {"param_count", param_count},
            {"metrics", metrics.to_json()},
            {"wall_time_s", wall_time_s},
            {"test_windows", test_windows},
            {"epochs", epochs},
            {"extra", extra}};
}

std::unique_ptr<Forecaster> build_model(const RunSpec& spec, Index target_channels) {
    if (spec.model == "arima") throw std::invalid_argument("arima is not a trainable forecaster");
    auto cfg = spec.fits;
    cfg.seed = spec.train.seed;
    cfg.channels = cfg.channel_mode == fits::ChannelMode::individual ? target_channels : 1;
    return make_model(spec.model, cfg, spec.kernel);
}

namespace {

// Channel-independent models get one group per input channel in individual
// mode; the windows' input channels are what the groups index.
Index group_channels(const Prepared& p) { return Index(p.train.input_channels().size()); }

}  // namespace

train::Metrics evaluate_arima(const Prepared& prepared, const RunSpec& spec, nlohmann::json* orders) {
    const auto& test = prepared.test;
    const auto idx = train::spaced_subset(test.size(), spec.subsample);
    const auto& in = test.input_channels();
    std::vector<Index> positions;
    for (Index t : test.target_channels())
        positions.push_back(Index(std::find(in.begin(), in.end(), t) - in.begin()));

    std::vector<Matrix> preds(idx.size());
    std::vector<std::string> chosen(idx.size() * positions.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> fallbacks{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (std::size_t k = next++; k < idx.size(); k = next++) {
            try {
                const Matrix x = test.input(idx[k]);
                Matrix out(test.pred_len(), Index(positions.size()));
                for (std::size_t c = 0; c < positions.size(); ++c) {
                    const Vector h = x.col(positions[c]);
                    classical::ArimaModel m;
                    try {
                        m = classical::auto_arima(h, spec.arima);
                    } catch (const classical::ArimaFitError& e) {
                        m = e.best();
                    } catch (const std::exception&) {
                        // flat or degenerate look-back
                        out.col(Index(c)) = classical::repeat_forecast(h, test.pred_len());
                        chosen[k * positions.size() + c] = "repeat";
                        ++fallbacks;
                        continue;
                    }
                    out.col(Index(c)) = classical::arima_forecast(m, h, test.pred_len());
                    chosen[k * positions.size() + c] =
                        std::to_string(m.p) + "," + std::to_string(m.d) + "," + std::to_string(m.q);
                }
                preds[k] = std::move(out);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    train::MetricAccumulator acc;
    for (std::size_t k = 0; k < idx.size(); ++k) acc.add(preds[k], test.target(idx[k]));
    if (orders) {
        std::map<std::string, int> counts;
        for (const auto& s : chosen) ++counts[s];
        *orders = {{"orders", counts}, {"fallbacks", fallbacks.load()}};
    }
    return acc.result();
}

RunResult run(const data::SeriesFrame& frame, const RunSpec& spec, std::ostream* log) {
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const auto prepared = prepare(frame, spec);

    RunResult result;
    auto& r = result.record;
    r.dataset = spec.dataset.empty() ? frame.name : spec.dataset;
    r.model = spec.model;
    r.mode = data::to_string(spec.mode);
    r.seq_len = spec.fits.seq_len;
    r.pred_len = spec.fits.pred_len;
    r.base_period = spec.fits.base_period;
    r.harmonic_order = spec.fits.harmonic_order;
    r.cutoff = uses_fits(spec.model) ? spec.fits.cutoff_bin() : 0;
    r.seed = spec.train.seed;
    r.extra = {{"spec", spec.to_json()}};

    if (spec.model == "arima") {
        nlohmann::json orders;
        r.metrics = evaluate_arima(prepared, spec, &orders);
        r.test_windows = Index(train::spaced_subset(prepared.test.size(), spec.subsample).size());
        r.extra["arima"] = orders;
    } else {
        result.model = build_model(spec, group_channels(prepared));
        r.param_count = result.model->param_count();
        if (r.param_count > 0) result.history = train::train_two_stage(*result.model, prepared.train, prepared.val, spec.train, log);
        r.epochs = int(result.history.epochs.size());
        const auto idx = train::spaced_subset(prepared.test.size(), spec.subsample);
        r.metrics = train::evaluate(*result.model, prepared.test, idx);
        r.test_windows = Index(idx.size());
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace freqcast::experiment
