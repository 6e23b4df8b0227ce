// nfb <kind> --config <path> [--seed U64] [--out DIR]
// exit 0: run passed its thresholds, 2: thresholds missed, 1: error

#include "nfb/error.hpp"
#include "nfb/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Near-field beamspace experiments"};
    std::string kind;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    app.add_option("kind", kind, "beamspace | widths | gaussian | psp | train | track | estimate")->required();
    app.add_option("--config", config_path, "JSON experiment config")->required();
    auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
    auto* out_opt = app.add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    std::filesystem::path out = out_opt->count() ? out_dir : "nfb_out/" + kind;
    try {
        if (!nfb::parse_kind(kind))
            throw nfb::Error(nfb::ErrorCode::Configuration, "unknown experiment kind \"" + kind + "\"");
        std::ifstream in(config_path);
        if (!in)
            throw nfb::Error(nfb::ErrorCode::Configuration, "cannot read config " + config_path);
        std::stringstream text;
        text << in.rdbuf();

        auto doc = nlohmann::json::parse(text.str(), nullptr, false);
        if (doc.is_object()) {
            if (!doc.contains("kind"))
                doc["kind"] = kind;
            else if (doc["kind"] != kind)
                throw nfb::Error(nfb::ErrorCode::Configuration, "config key \"kind\": does not match command " + kind);
            if (seed_opt->count())
                doc["seed"] = seed;
        }
        const auto cfg = nfb::parse_config(doc.is_discarded() ? text.str() : doc.dump());
        if (!out_opt->count() && cfg.out)
            out = *cfg.out;

        const auto result = nfb::run(cfg, out);
        std::cout << result.summary.dump(2) << "\n";
        return result.pass ? 0 : 2;
    } catch (const nfb::Error& e) {
        nfb::write_error(out, nfb::to_string(e.code()), e.what());
        std::cerr << "error [" << nfb::to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nfb::write_error(out, "internal", e.what());
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
