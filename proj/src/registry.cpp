#include "freqcast/registry.hpp"

#include "freqcast/classical.hpp"
#include "freqcast/linear_models.hpp"

#include <stdexcept>

namespace freqcast {

const std::vector<std::string>& model_kinds() {
    static const std::vector<std::string> kinds{"fits",         "dlinear",      "nlinear", "linear",
                                                "dlinear_fits", "fits_dlinear", "repeat",  "mean"};
    return kinds;
}

std::unique_ptr<Forecaster> make_model(const std::string& kind, const nlohmann::json& c) {
    using classical::NaiveModel;
    if (kind == "fits") return std::make_unique<fits::FitsModel>(fits::FitsConfig::from_json(c));
    if (kind == "dlinear")
        return std::make_unique<linear::DLinear>(c.at("seq_len"), c.at("pred_len"), c.value("kernel", Index{25}),
                                                 c.value("with_backcast", false));
    if (kind == "nlinear")
        return std::make_unique<linear::NLinear>(c.at("seq_len"), c.at("pred_len"), c.value("seed", std::uint64_t{0}));
    if (kind == "linear")
        return std::make_unique<linear::LinearModel>(c.at("seq_len"), c.at("pred_len"),
                                                     c.value("seed", std::uint64_t{0}));
    if (kind == "dlinear_fits")
        return std::make_unique<linear::DLinearPlusFits>(fits::FitsConfig::from_json(c.at("fits")),
                                                         c.value("kernel", Index{25}));
    if (kind == "fits_dlinear")
        return std::make_unique<linear::FitsPlusDLinear>(fits::FitsConfig::from_json(c.at("fits")),
                                                         c.value("kernel", Index{25}));
    if (kind == "repeat") return std::make_unique<NaiveModel>(NaiveModel::Rule::repeat, c.at("seq_len"), c.at("pred_len"));
    if (kind == "mean") return std::make_unique<NaiveModel>(NaiveModel::Rule::mean, c.at("seq_len"), c.at("pred_len"));
    std::string known;
    for (const auto& k : model_kinds()) known += (known.empty() ? "" : ", ") + k;
    throw std::invalid_argument("unknown model kind '" + kind + "' (known: " + known + ", arima)");
}

std::unique_ptr<Forecaster> make_model(const std::string& kind, const fits::FitsConfig& cfg, Index kernel) {
    if (kind == "fits") return make_model(kind, cfg.to_json());
    if (kind == "dlinear_fits" || kind == "fits_dlinear")
        return make_model(kind, nlohmann::json{{"fits", cfg.to_json()}, {"kernel", kernel}});
    return make_model(kind, nlohmann::json{{"seq_len", cfg.seq_len},
                                           {"pred_len", cfg.pred_len},
                                           {"kernel", kernel},
                                           {"seed", cfg.seed}});
}

nlohmann::json DatasetPreset::to_json() const {
    return {{"name", name},
            {"file", file},
            {"seq_len", seq_len},
            {"base_period", base_period},
            {"harmonic_order", harmonic_order},
            {"channel_mode", fits::to_string(channel_mode)},
            {"horizons", horizons},
            {"target", target}};
}

const std::vector<DatasetPreset>& dataset_presets() {
    using data::SplitSpec;
    using fits::ChannelMode;
    static const std::vector<DatasetPreset> presets = [] {
        std::vector<DatasetPreset> p;
        p.push_back({"etth1", "ETTh1.csv", 360, 24, 6, ChannelMode::shared, SplitSpec::ett_calendar(24)});
        p.push_back({"etth2", "ETTh2.csv", 720, 24, 6, ChannelMode::shared, SplitSpec::ett_calendar(24)});
        p.push_back({"ettm1", "ETTm1.csv", 720, 96, 14, ChannelMode::shared, SplitSpec::ett_calendar(96)});
        p.push_back({"ettm2", "ETTm2.csv", 720, 96, 14, ChannelMode::shared, SplitSpec::ett_calendar(96)});
        p.push_back({"electricity", "electricity.csv", 720, 24, 10, ChannelMode::shared, SplitSpec::standard()});
        p.push_back({"weather", "weather.csv", 720, 144, 12, ChannelMode::individual, SplitSpec::standard()});
        p.push_back({"traffic", "traffic.csv", 720, 24, 10, ChannelMode::shared, SplitSpec::standard()});
        p.push_back({"exchange", "exchange_rate.csv", 336, 5, 2, ChannelMode::shared, SplitSpec::standard()});
        DatasetPreset ili{"illness", "national_illness.csv", 104, 52, 4, ChannelMode::shared, SplitSpec::standard()};
        ili.horizons = {24, 36, 48, 60};
        p.push_back(ili);
        return p;
    }();
    return presets;
}

const DatasetPreset& find_preset(const std::string& name) {
    for (const auto& p : dataset_presets())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : dataset_presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw std::invalid_argument("unknown preset '" + name + "'; known presets: " + known);
}

}  // namespace freqcast
