#pragma once

#include "nfb/array_channel.hpp"
#include "nfb/beamspace.hpp"

#include <optional>
#include <span>
#include <vector>

namespace nfb {

struct PathSpec {
    cdouble gain;
    SourceLocation location;
};

/// h = sum_l g_l * a(loc_l). Paths are also kept in beamspace coordinates
/// (a far-field path has s_hat = 0).
struct MultipathChannel {
    std::vector<Atom> paths;
    std::vector<cdouble> h;

    std::size_t path_count() const noexcept { return paths.size(); }
};

MultipathChannel build_channel(const ArrayConfig& cfg, std::span<const PathSpec> paths, ChannelModel model);
/// Paths given directly in beamspace coordinates, each contributing g * basis(theta, s).
MultipathChannel build_channel(const ArrayConfig& cfg, std::span<const Atom> paths);

struct GridCell {
    int row;
    int angle;

    friend bool operator==(const GridCell&, const GridCell&) = default;
    friend auto operator<=>(const GridCell&, const GridCell&) = default;
};

struct StopRule {
    std::optional<int> paths;  ///< stop after this many atoms
    double residual = 0.0;     ///< or once the residual norm is at most this
};

struct EstimationReport {
    std::vector<GridCell> support;
    std::vector<Atom> atoms;
    std::vector<cdouble> estimate;
    std::vector<double> residual_norms;  ///< after each iteration
    int iterations = 0;
};

/// Orthogonal matching pursuit over the basis vectors of `grid`. Each
/// iteration correlates the residual with the whole dictionary through one
/// fast beamspace evaluation, adds the strongest unused cell, and refits all
/// selected atoms by least squares.
EstimationReport omp_estimate(std::span<const cdouble> y, const BeamspaceGrid& grid, const ArrayConfig& cfg,
                              StopRule stop);

/// 10 log10(|h_hat - h|^2 / |h|^2), floored at kNmseFloor.
double nmse(std::span<const cdouble> h, std::span<const cdouble> h_hat);
inline constexpr double kNmseFloor = -300.0;

} // namespace nfb
