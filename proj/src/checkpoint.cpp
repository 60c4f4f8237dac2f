#include "freqcast/checkpoint.hpp"

#include "freqcast/registry.hpp"

#include <fstream>
#include <stdexcept>

namespace freqcast {

nlohmann::json checkpoint_json(const Forecaster& model) {
    nlohmann::json params = nlohmann::json::array();
    const auto stores = model.stores();
    for (std::size_t s = 0; s < stores.size(); ++s) {
        for (const auto& p : *stores[s]) {
            params.push_back({{"store", s},
                              {"name", p.name},
                              {"complex", p.is_complex},
                              {"rows", p.rows},
                              {"cols", p.cols},
                              {"values", std::vector<double>(p.value.data(), p.value.data() + p.value.size())}});
        }
    }
    return {{"format", "freqcast-checkpoint"},
            {"version", kCheckpointVersion},
            {"model_kind", model.kind()},
            {"config", model.config_json()},
            {"parameters", params}};
}

std::unique_ptr<Forecaster> model_from_checkpoint(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "freqcast-checkpoint") throw std::runtime_error("not a freqcast checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + j.at("version").dump());
    auto model = make_model(j.at("model_kind").get<std::string>(), j.at("config"));
    auto stores = model->stores();
    std::size_t total = 0;
    for (auto* s : stores) total += s->size();
    const auto& params = j.at("parameters");
    if (params.size() != total) throw std::runtime_error("checkpoint parameter count does not match the model");
    std::size_t k = 0;
    for (auto* s : stores) {
        for (auto& p : *s) {
            const auto& e = params.at(k++);
            if (e.at("name") != p.name || e.at("rows").get<Index>() != p.rows || e.at("cols").get<Index>() != p.cols ||
                e.at("complex").get<bool>() != p.is_complex)
                throw std::runtime_error("checkpoint block '" + e.at("name").get<std::string>() +
                                         "' does not match the model layout");
            const auto vals = e.at("values").get<std::vector<double>>();
            if (Index(vals.size()) != p.value.size()) throw std::runtime_error("checkpoint block size mismatch");
            p.value = Eigen::Map<const Vector>(vals.data(), Index(vals.size()));
        }
    }
    return model;
}

void save_checkpoint(const Forecaster& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << checkpoint_json(model).dump() << '\n';
}

std::unique_ptr<Forecaster> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return model_from_checkpoint(nlohmann::json::parse(in));
}

}  // namespace freqcast
