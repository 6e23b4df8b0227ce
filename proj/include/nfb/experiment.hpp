#pragma once

#include "nfb/array_channel.hpp"
#include "nfb/beam_procedures.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nfb {

enum class ExperimentKind { Beamspace, Widths, Gaussian, Psp, Train, Track, Estimate };

const char* to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_kind(std::string_view name);

/// Validated experiment description with every default filled in.
/// Surrogate quantities given in the config (s_max, ds_list) are in units
/// of 1/N^2.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Widths;
    int n = 512;
    double wavelength = 0.01;
    double spacing = 0.005;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;

    int angles = 512;
    int rows = 11;
    double s_max = 176.0;

    std::vector<int> n_list;
    double threshold = 0.5;
    std::vector<double> ds_list{50.0, 100.0, 200.0};
    double resolution = 0.125;  ///< units of 1/N

    double snr_db = 10.0;  ///< estimate defaults to 20
    int k1 = 8;
    int s = 7;
    int trials = 500;
    ChannelModel model = ChannelModel::Exact;
    double theta_max = 0.95;

    double gamma = 0.7071067811865476;
    int slots = 100;
    double speed = 0.1;  ///< angle beamwidths (2/N) per slot
    double theta0 = 0.0;
    double r0 = 40.0;

    int paths = 3;

    double user_theta = 0.3;
    double user_r = 50.0;

    ArrayConfig array() const;
    BeamspaceGrid grid() const;
    nlohmann::ordered_json to_json() const;
};

/// Parses a JSON document. Unknown keys, type mismatches, out-of-range values
/// and a missing seed (train, track, estimate) raise a configuration error
/// naming the key.
ExperimentConfig parse_config(std::string_view text);

struct RunOutcome {
    bool pass = false;
    nlohmann::ordered_json summary;
    std::filesystem::path csv;
};

/// Runs the experiment and writes <kind>.csv, summary.json and config.json
/// into `out_dir` (created if missing).
RunOutcome run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Writes error.json with the error code and message.
void write_error(const std::filesystem::path& out_dir, std::string_view code, std::string_view message);

/// Trial i uses seed base + i; all randomness of the trial derives from it.
std::uint64_t trial_seed(std::uint64_t base, std::size_t i) noexcept;
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

struct TrainTrial {
    std::uint64_t seed;
    double theta;
    double range;
    std::size_t pilots_exhaustive;
    std::size_t pilots_hierarchical;
    std::size_t pilots_refined;  ///< hierarchical + refinement stencils
    double rho_exhaustive;
    double rho_hierarchical;
    double rho_refined;
};

/// Users uniform in theta over (-theta_max, theta_max) and log-uniform in
/// range over the radiating near field.
std::vector<TrainTrial> train_trials(const ExperimentConfig& cfg);

struct EstimateTrial {
    std::uint64_t seed;
    double nmse_db;
    bool support_exact;
};

/// `paths` distinct random grid cells with unit-modulus random-phase gains.
std::vector<EstimateTrial> estimate_trials(const ExperimentConfig& cfg);

/// Straight angular sweep at constant range: theta_t = theta0 + t * speed * 2/N.
std::vector<SourceLocation> track_trajectory(const ExperimentConfig& cfg);
TrackResult track_scenario(const ExperimentConfig& cfg);

} // namespace nfb
