// freqcast command-line tool.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include "freqcast/checkpoint.hpp"
#include "freqcast/diagnostics.hpp"
#include "freqcast/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace freqcast;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

data::SeriesFrame load_input(const std::string& path, const std::string& target) {
    if (!fs::exists(path)) throw UsageError("no such file: " + path);
    return data::load_csv(path, target);
}

data::SplitSpec parse_split(const std::string& s, Index samples_per_day) {
    if (s == "standard") return data::SplitSpec::standard();
    if (s == "ett") return data::SplitSpec::ett();
    if (s == "ett_calendar") return data::SplitSpec::ett_calendar(samples_per_day);
    std::stringstream ss(s);
    std::string part;
    std::vector<double> r;
    while (std::getline(ss, part, ',')) {
        try {
            r.push_back(std::stod(part));
        } catch (const std::exception&) {
            r.clear();
            break;
        }
    }
    if (r.size() != 3)
        throw UsageError("--split must be standard, ett, ett_calendar or three comma separated ratios");
    return data::SplitSpec::custom(r[0], r[1], r[2]);
}

// Options shared by train and benchmark.
struct TrainFlags {
    int epochs_combined = -1, epochs_finetune = -1;
    Index batch_size = 64;
    double lr = 5e-4;
    int lr_patience = 3, patience = 10;
    std::uint64_t seed = 0;
    Index subsample = 0;
    Index max_val_windows = 0;
    std::string variant = "plain";
    Index depth = 0, hidden = 128;
    double dropout = 0.0;
    Index kernel = 25;
    int max_p = 3, max_d = 2, max_q = 3;
    bool quiet = false;

    void add(CLI::App* app) {
        app->add_option("--epochs-combined", epochs_combined, "Epochs of the backcast+forecast stage");
        app->add_option("--epochs-finetune", epochs_finetune, "Epochs of the forecast-only stage");
        app->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);
        app->add_option("--lr", lr, "Initial learning rate")->check(CLI::PositiveNumber);
        app->add_option("--lr-patience", lr_patience)->check(CLI::NonNegativeNumber);
        app->add_option("--patience", patience, "Early stopping patience")->check(CLI::PositiveNumber);
        app->add_option("--seed", seed);
        app->add_option("--subsample", subsample, "Evaluate on this many evenly spaced test windows (0 = all)");
        app->add_option("--max-val-windows", max_val_windows, "Cap on validation windows per epoch (0 = all)");
        app->add_option("--variant", variant, "plain, deep_modrelu, deep_crelu, deep_after_upscaler, real_deep, bypass")
            ->check(CLI::IsMember({"plain", "deep_modrelu", "deep_crelu", "deep_after_upscaler", "real_deep", "bypass"}));
        app->add_option("--depth", depth, "Hidden complex layers of deep variants");
        app->add_option("--hidden", hidden, "Width of hidden complex layers");
        app->add_option("--dropout", dropout);
        app->add_option("--kernel", kernel, "Moving average kernel of DLinear");
        app->add_option("--max-p", max_p);
        app->add_option("--max-d", max_d);
        app->add_option("--max-q", max_q);
        app->add_flag("--quiet", quiet, "No per-epoch log on stderr");
    }

    void apply(experiment::RunSpec& s) const {
        if (epochs_combined >= 0) s.train.max_epochs_combined = epochs_combined;
        if (epochs_finetune >= 0) s.train.max_epochs_finetune = epochs_finetune;
        s.train.batch_size = batch_size;
        s.train.learning_rate = lr;
        s.train.lr_patience = lr_patience;
        s.train.early_stop_patience = patience;
        s.train.seed = seed;
        s.train.max_val_windows = max_val_windows;
        s.subsample = subsample;
        s.fits.variant = fits::variant_from_string(variant);
        s.fits.depth = depth;
        s.fits.hidden = hidden;
        s.fits.dropout = dropout;
        s.kernel = kernel;
        s.arima.max_p = max_p;
        s.arima.max_d = max_d;
        s.arima.max_q = max_q;
    }
};

fs::path results_root(const std::string& flag) { return flag.empty() ? env_or("FREQCAST_RESULTS_DIR", "results") : flag; }

// results/<dataset>/<model>/<horizon>.json plus checkpoint and history.
fs::path save_run(const experiment::RunResult& r, const fs::path& root) {
    const fs::path dir = root / r.record.dataset / r.record.model;
    const std::string h = std::to_string(r.record.pred_len);
    write_text(dir / (h + ".json"), r.record.to_json().dump(2) + "\n");
    if (r.model) save_checkpoint(*r.model, (dir / (h + ".ckpt.json")).string());
    if (!r.history.epochs.empty()) {
        std::ostringstream out;
        r.history.write_jsonl(out);
        write_text(dir / (h + ".history.jsonl"), out.str());
    }
    return dir / (h + ".json");
}

int cmd_train(const std::string& data_path, const std::string& preset_name, experiment::RunSpec spec,
              const TrainFlags& flags, const std::map<std::string, bool>& given, const std::string& out_root,
              std::string target) {
    if (!preset_name.empty()) {
        const DatasetPreset* found = nullptr;
        try {
            found = &find_preset(preset_name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        const auto& p = *found;
        auto base = experiment::spec_from_preset(p, spec.model, given.at("pred-len") ? spec.fits.pred_len : p.horizons.front());
        // explicit flags win over the preset
        if (given.at("seq-len")) base.fits.seq_len = spec.fits.seq_len;
        if (given.at("base-t")) base.fits.base_period = spec.fits.base_period;
        if (given.at("h-order")) base.fits.harmonic_order = spec.fits.harmonic_order;
        if (given.at("cutoff")) base.fits.cutoff_override = spec.fits.cutoff_override;
        if (given.at("channel-mode")) base.fits.channel_mode = spec.fits.channel_mode;
        if (given.at("split")) base.split = spec.split;
        if (given.at("mode")) base.mode = spec.mode;
        base.dataset = spec.dataset.empty() ? p.name : spec.dataset;
        if (target.empty()) target = p.target;
        spec = base;
    }
    flags.apply(spec);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto frame = load_input(data_path, target);
    if (spec.dataset.empty()) spec.dataset = fs::path(data_path).stem().string();
    const auto result = experiment::run(frame, spec, flags.quiet ? nullptr : &std::cerr);
    const auto path = save_run(result, results_root(out_root));
    std::cout << result.record.to_json().dump(2) << "\n";
    if (!flags.quiet) std::cerr << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_diagnose(const std::string& data_path, const std::vector<std::string>& channels, Index max_lag,
                 bool low_pass, Index cutoff, const std::string& kind, const std::string& out) {
    const auto frame = data::clean_sentinels(load_input(data_path, ""));
    std::vector<Index> cols;
    if (channels.empty()) {
        for (Index c = 0; c < frame.channels(); ++c) cols.push_back(c);
    } else {
        for (const auto& name : channels) {
            try {
                cols.push_back(frame.channel_index(name));
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
        }
    }
    nlohmann::json report = nlohmann::json::array();
    int ok = 0;
    for (Index c : cols) {
        nlohmann::json entry{{"channel", frame.channel_names[std::size_t(c)]}};
        try {
            Vector x = frame.values.col(c);
            if (low_pass) x = diagnostics::low_pass_series(x, cutoff);
            entry["hurst"] = diagnostics::hurst(x, kind == "change" ? diagnostics::HurstKind::change
                                                                    : diagnostics::HurstKind::random_walk)
                                 .to_json();
            entry["acf"] = diagnostics::acf(x, max_lag).to_json();
            ++ok;
        } catch (const std::exception& e) {
            entry["error"] = e.what();
        }
        report.push_back(entry);
    }
    const nlohmann::json doc{{"data", data_path}, {"low_pass", low_pass ? nlohmann::json(cutoff) : nlohmann::json()},
                             {"kind", kind}, {"channels", report}};
    if (out.empty())
        std::cout << doc.dump(2) << "\n";
    else
        write_text(out, doc.dump(2) + "\n");
    return ok > 0 ? 0 : 1;
}

std::string csv_row(const experiment::RunRecord& r) {
    std::ostringstream s;
    s.precision(17);
    s << r.dataset << ',' << r.model << ',' << r.mode << ',' << r.seq_len << ',' << r.pred_len << ',' << r.base_period
      << ',' << r.harmonic_order << ',' << r.cutoff << ',' << r.seed << ',' << r.param_count << ',' << r.metrics.mse
      << ',' << r.metrics.mae << ',' << r.metrics.se << ',' << r.metrics.rrmse << ',' << r.test_windows << ','
      << r.wall_time_s << '\n';
    return s.str();
}

int cmd_benchmark(std::vector<std::string> presets, bool all, const std::vector<std::string>& models,
                  const std::vector<Index>& horizons, const std::string& data_dir_flag, const TrainFlags& flags,
                  const std::string& out_root, bool list) {
    if (list) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& p : dataset_presets()) j.push_back(p.to_json());
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    if (all)
        for (const auto& p : dataset_presets()) presets.push_back(p.name);
    if (presets.empty()) throw UsageError("benchmark needs --preset NAME or --all");
    std::vector<const DatasetPreset*> chosen;
    for (const auto& n : presets) {
        try {
            chosen.push_back(&find_preset(n));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    for (const auto& m : models) {
        experiment::RunSpec probe;
        probe.model = m;
        try {
            probe.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    const fs::path data_dir = data_dir_flag.empty() ? env_or("FREQCAST_DATA_DIR", "data") : data_dir_flag;
    const fs::path root = results_root(out_root);
    std::string csv = "dataset,model,mode,seq_len,pred_len,base_T,H_order,cutoff,seed,param_count,mse,mae,se,rrmse,"
                      "test_windows,wall_time_s\n";
    nlohmann::json records = nlohmann::json::array();
    int failures = 0;
    for (const auto* p : chosen) {
        const fs::path file = data_dir / p->file;
        if (!fs::exists(file)) throw UsageError("missing data file " + file.string() + " for preset " + p->name);
        const auto frame = data::load_csv(file.string(), p->target);
        for (const auto& m : models) {
            for (Index h : horizons.empty() ? p->horizons : horizons) {
                auto spec = experiment::spec_from_preset(*p, m, h);
                flags.apply(spec);
                if (m == "arima" && flags.subsample == 0) spec.subsample = 100;
                try {
                    const auto r = experiment::run(frame, spec, flags.quiet ? nullptr : &std::cerr);
                    save_run(r, root);
                    csv += csv_row(r.record);
                    records.push_back(r.record.to_json());
                    if (!flags.quiet)
                        std::cerr << p->name << ' ' << m << ' ' << h << ": mse " << r.record.metrics.mse << " mae "
                                  << r.record.metrics.mae << "\n";
                } catch (const std::exception& e) {
                    ++failures;
                    records.push_back({{"dataset", p->name}, {"model", m}, {"pred_len", h}, {"error", e.what()}});
                    std::cerr << p->name << ' ' << m << ' ' << h << ": " << e.what() << "\n";
                }
            }
        }
    }
    write_text(root / "benchmark.csv", csv);
    write_text(root / "benchmark.json", records.dump(2) + "\n");
    std::cout << csv;
    return failures ? 1 : 0;
}

int cmd_synth(const std::string& spec_path, const std::string& spec_inline, const std::string& out) {
    nlohmann::json spec;
    if (!spec_inline.empty()) {
        try {
            spec = nlohmann::json::parse(spec_inline);
        } catch (const nlohmann::json::parse_error& e) {
            throw UsageError(std::string("--spec-json: ") + e.what());
        }
    } else {
        if (!fs::exists(spec_path)) throw UsageError("no such file: " + spec_path);
        std::ifstream in(spec_path);
        try {
            spec = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(spec_path + ": " + e.what());
        }
    }
    const auto frame = data::synth_generate(spec);
    if (out.empty())
        std::cout << data::to_csv(frame);
    else
        write_text(out, data::to_csv(frame));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"freqcast: frequency-domain forecasting, baselines and diagnostics"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "Train and evaluate one model on one CSV");
    std::string data_path, preset, out_root, mode = "M", channel_mode = "shared", split = "standard", target;
    experiment::RunSpec spec;
    Index cutoff = -1, samples_per_day = 24;
    TrainFlags train_flags;
    train->add_option("--data", data_path, "CSV file")->required();
    train->add_option("--preset", preset, "Take hyperparameters and split from a benchmark preset");
    train->add_option("--dataset", spec.dataset, "Dataset label for the results directory");
    train->add_option("--model", spec.model, "fits, dlinear, nlinear, linear, dlinear_fits, fits_dlinear, repeat, mean, arima");
    auto* o_seq = train->add_option("--seq-len", spec.fits.seq_len);
    auto* o_pred = train->add_option("--pred-len", spec.fits.pred_len);
    auto* o_base = train->add_option("--base-t", spec.fits.base_period, "Base period of the dominant cycle");
    auto* o_h = train->add_option("--h-order", spec.fits.harmonic_order, "Harmonics kept below the cutoff");
    auto* o_cut = train->add_option("--cutoff", cutoff, "Explicit cutoff bin");
    auto* o_mode = train->add_option("--mode", mode)->check(CLI::IsMember({"S", "MS", "M"}));
    auto* o_cm = train->add_option("--channel-mode", channel_mode)->check(CLI::IsMember({"shared", "individual"}));
    auto* o_split = train->add_option("--split", split, "standard, ett, ett_calendar or r_train,r_val,r_test");
    train->add_option("--samples-per-day", samples_per_day, "For the calendar split");
    train->add_option("--target", target, "Target column (default: last)");
    train->add_option("--out", out_root, "Results root (default $FREQCAST_RESULTS_DIR or ./results)");
    train_flags.add(train);

    // diagnose
    auto* diag = app.add_subcommand("diagnose", "Hurst exponent and autocorrelation per channel");
    std::string diag_data, diag_out, diag_kind = "random_walk";
    std::vector<std::string> diag_channels;
    Index max_lag = 48, lp_cutoff = 200;
    bool low_pass = false;
    diag->add_option("--data", diag_data)->required();
    diag->add_option("--channel", diag_channels, "Channel name (repeatable; default all)");
    diag->add_option("--max-lag", max_lag)->check(CLI::NonNegativeNumber);
    diag->add_flag("--low-pass", low_pass, "Low-pass filter each channel first");
    diag->add_option("--low-pass-cutoff", lp_cutoff, "Cutoff bin of the filter")->check(CLI::NonNegativeNumber);
    diag->add_option("--kind", diag_kind, "random_walk (R/S on the series) or change (on increments)")
        ->check(CLI::IsMember({"random_walk", "change"}));
    diag->add_option("--out", diag_out, "Write JSON here instead of stdout");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "Run preset dataset x model x horizon grids");
    std::vector<std::string> presets, models{"fits"};
    std::vector<Index> horizons;
    std::string data_dir, bench_out;
    bool all = false, list = false;
    TrainFlags bench_flags;
    bench->add_option("--preset", presets, "Preset name (repeatable)");
    bench->add_flag("--all", all, "Every preset");
    bench->add_flag("--list", list, "Print the presets and exit");
    bench->add_option("--models", models, "Model kinds (repeatable)");
    bench->add_option("--horizons", horizons, "Override the preset horizons");
    bench->add_option("--data-dir", data_dir, "Directory with the CSVs (default $FREQCAST_DATA_DIR or ./data)");
    bench->add_option("--out", bench_out, "Results root (default $FREQCAST_RESULTS_DIR or ./results)");
    bench_flags.add(bench);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic series described by JSON to CSV");
    std::string synth_spec, synth_inline, synth_out;
    auto* spec_group = synth->add_option_group("spec");
    spec_group->add_option("--spec", synth_spec, "JSON spec file");
    spec_group->add_option("--spec-json", synth_inline, "JSON spec text");
    spec_group->require_option(1);
    synth->add_option("--out", synth_out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*train) {
            spec.mode = data::mode_from_string(mode);
            spec.fits.channel_mode = fits::channel_mode_from_string(channel_mode);
            spec.split = parse_split(split, samples_per_day);
            if (cutoff >= 0) spec.fits.cutoff_override = cutoff;
            const std::map<std::string, bool> given{
                {"seq-len", o_seq->count() > 0},  {"pred-len", o_pred->count() > 0}, {"base-t", o_base->count() > 0},
                {"h-order", o_h->count() > 0},    {"cutoff", o_cut->count() > 0},    {"mode", o_mode->count() > 0},
                {"channel-mode", o_cm->count() > 0}, {"split", o_split->count() > 0}};
            return cmd_train(data_path, preset, spec, train_flags, given, out_root, target);
        }
        if (*diag) return cmd_diagnose(diag_data, diag_channels, max_lag, low_pass, lp_cutoff, diag_kind, diag_out);
        if (*bench) return cmd_benchmark(presets, all, models, horizons, data_dir, bench_flags, bench_out, list);
        if (*synth) return cmd_synth(synth_spec, synth_inline, synth_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
