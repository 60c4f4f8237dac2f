#include "doctest.h"

#include "freqcast/classical.hpp"
#include "freqcast/data.hpp"
#include "freqcast/experiment.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace freqcast;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const fs::path& scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("freqcast_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result run(const std::string& args, const std::string& env = "") {
    const char* bin = std::getenv("FREQCAST_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "FREQCAST_BIN is not set");
    const auto err_file = scratch() / "stderr.txt";
    const std::string cmd = "cd '" + scratch().string() + "' && " + env + " '" + bin + "' " + args + " 2>'" +
                            err_file.string() + "'";
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err_file);
    return r;
}

const std::string kSynth =
    R"({"length": 1600, "seed": 5, "channels": [)"
    R"({"name": "a", "components": [{"kind": "sine", "period": 24, "harmonics": [1, 0.4]}, {"kind": "noise", "variance": 0.01}]},)"
    R"({"name": "OT", "components": [{"kind": "sine", "period": 24}, {"kind": "drift", "slope": 0.001}, {"kind": "noise", "variance": 0.01}]}]})";

fs::path synth_csv() {
    static const fs::path p = [] {
        const auto path = scratch() / "series.csv";
        const auto r = run("synth --spec-json '" + kSynth + "' --out " + path.string());
        REQUIRE(r.code == 0);
        return path;
    }();
    return p;
}

}  // namespace

TEST_CASE("synth writes a loadable, reproducible CSV") {
    const auto path = synth_csv();
    const auto frame = data::load_csv(path.string());
    const auto direct = data::synth_generate(nlohmann::json::parse(kSynth));
    CHECK(frame.channel_names == direct.channel_names);
    CHECK((frame.values - direct.values).cwiseAbs().maxCoeff() == 0.0);

    const auto again = scratch() / "series2.csv";
    REQUIRE(run("synth --spec-json '" + kSynth + "' --out " + again.string()).code == 0);
    CHECK(slurp(again) == slurp(path));

    const auto stdout_csv = run("synth --spec-json '" + kSynth + "'");
    CHECK(stdout_csv.out == slurp(path));

    const auto bad = run(R"(synth --spec-json '{"length": 5, "components": [{"kind": "bogus"}]}')");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("components[0]") != std::string::npos);
    CHECK(run("synth --spec missing.json").code == 2);
    CHECK(run("synth").code == 2);
}

TEST_CASE("train writes a record, checkpoint and history") {
    const auto path = synth_csv();
    const std::string args = "train --data " + path.string() +
                             " --model fits --seq-len 360 --pred-len 96 --base-t 24 --h-order 6 --mode M"
                             " --epochs-combined 2 --epochs-finetune 2 --subsample 50 --quiet";
    const auto r = run(args);
    REQUIRE(r.code == 0);
    const auto rec = nlohmann::json::parse(r.out);
    CHECK(rec["cutoff"] == 90);
    CHECK(rec["dataset"] == "series");
    CHECK(rec["mode"] == "M");
    fits::FitsConfig c;
    c.seq_len = 360;
    c.pred_len = 96;
    c.base_period = 24;
    c.harmonic_order = 6;
    CHECK(rec["param_count"].get<Index>() == fits::FitsModel::expected_param_count(c));
    CHECK(rec["epochs"] == 4);
    CHECK(rec["test_windows"] == 50);

    const auto dir = scratch() / "results" / "series" / "fits";
    CHECK(nlohmann::json::parse(slurp(dir / "96.json")) == rec);
    CHECK(fs::exists(dir / "96.ckpt.json"));
    std::istringstream hist(slurp(dir / "96.history.jsonl"));
    std::string line;
    int lines = 0;
    while (std::getline(hist, line)) {
        CHECK(nlohmann::json::parse(line).contains("val_loss"));
        ++lines;
    }
    CHECK(lines == 4);

    // rerunning reproduces everything but the clock
    const auto again = nlohmann::json::parse(run(args).out);
    auto strip = [](nlohmann::json j) {
        j.erase("wall_time_s");
        return j;
    };
    CHECK(strip(again) == strip(rec));

    // results root from the environment
    const auto env_root = scratch() / "elsewhere";
    REQUIRE(run(args, "FREQCAST_RESULTS_DIR='" + env_root.string() + "'").code == 0);
    CHECK(fs::exists(env_root / "series" / "fits" / "96.json"));
}

TEST_CASE("train baselines and usage errors") {
    const auto path = synth_csv();
    const auto r = run("train --data " + path.string() + " --model repeat --seq-len 96 --pred-len 24 --quiet");
    REQUIRE(r.code == 0);
    const auto rec = nlohmann::json::parse(r.out);
    CHECK(rec["param_count"] == 0);
    CHECK(rec["epochs"] == 0);

    // same number through the library
    experiment::RunSpec spec;
    spec.model = "repeat";
    spec.fits.seq_len = 96;
    spec.fits.pred_len = 24;
    const auto prepared = experiment::prepare(data::load_csv(path.string()), spec);
    classical::NaiveModel rep(classical::NaiveModel::Rule::repeat, 96, 24);
    CHECK(rec["metrics"]["mse"].get<double>() == doctest::Approx(train::evaluate(rep, prepared.test).mse).epsilon(1e-12));

    CHECK(run("train --data nothing_here.csv").code == 2);
    CHECK(run("train --data " + path.string() + " --mode S --channel-mode individual").code == 2);
    CHECK(run("train --data " + path.string() + " --model transformer").code == 2);
    CHECK(run("train --data " + path.string() + " --preset nope").code == 2);
    CHECK(run("train --data " + path.string() + " --mode X").code == 2);
    CHECK(run("train").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("--help").code == 0);
}

TEST_CASE("diagnose") {
    const auto r = run("diagnose --data " + synth_csv().string() + " --max-lag 0");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["channels"].size() == 2);
    for (const auto& c : j["channels"]) {
        CHECK(c["acf"]["rho"] == nlohmann::json::array({1.0}));
        CHECK(c["hurst"].contains("H"));
    }

    data::SeriesFrame f;
    f.channel_names = {"flat", "OT"};
    f.values.resize(400, 2);
    for (Index t = 0; t < 400; ++t) {
        f.timestamps.push_back(std::to_string(t));
        f.values(t, 0) = 3.0;
        f.values(t, 1) = std::sin(0.37 * double(t)) + 0.01 * double(t % 7);
    }
    const auto mixed = scratch() / "mixed.csv";
    data::save_csv(f, mixed.string());
    const auto m = run("diagnose --data " + mixed.string() + " --max-lag 5");
    CHECK(m.code == 0);
    const auto mj = nlohmann::json::parse(m.out);
    CHECK(mj["channels"][0].contains("error"));
    CHECK(mj["channels"][1].contains("hurst"));

    const auto flat_only = run("diagnose --data " + mixed.string() + " --channel flat");
    CHECK(flat_only.code == 1);

    const auto filtered = run("diagnose --data " + mixed.string() + " --channel OT --low-pass --low-pass-cutoff 20");
    CHECK(filtered.code == 0);
    CHECK(nlohmann::json::parse(filtered.out)["low_pass"] == 20);
    CHECK(run("diagnose --data " + mixed.string() + " --channel nope").code == 2);
}

TEST_CASE("benchmark") {
    const auto list = run("benchmark --list");
    REQUIRE(list.code == 0);
    const auto presets = nlohmann::json::parse(list.out);
    bool weather_individual = false;
    for (const auto& p : presets)
        if (p["name"] == "weather") weather_individual = p["channel_mode"] == "individual";
    CHECK(weather_individual);

    const auto unknown = run("benchmark --preset nope");
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("etth1") != std::string::npos);
    CHECK(run("benchmark --preset illness --data-dir '" + scratch().string() + "/empty'").code == 2);

    // a small grid on a synthetic stand-in for the illness file
    const auto dir = scratch() / "data";
    fs::create_directories(dir);
    fs::copy_file(synth_csv(), dir / "national_illness.csv", fs::copy_options::overwrite_existing);
    const auto out = scratch() / "bench";
    const auto r = run("benchmark --preset illness --models repeat --models mean --horizons 24 --data-dir '" +
                       dir.string() + "' --out '" + out.string() + "' --quiet");
    REQUIRE(r.code == 0);
    const auto csv = slurp(out / "benchmark.csv");
    CHECK(csv.find("illness,repeat,M,104,24") != std::string::npos);
    CHECK(csv.find("illness,mean,M,104,24") != std::string::npos);
    CHECK(nlohmann::json::parse(slurp(out / "benchmark.json")).size() == 2);
    CHECK(fs::exists(out / "illness" / "repeat" / "24.json"));
}
