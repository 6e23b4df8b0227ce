#include "nfb/sparse_estimation.hpp"

#include "nfb/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace nfb {

MultipathChannel build_channel(const ArrayConfig& cfg, std::span<const PathSpec> paths, ChannelModel model) {
    if (paths.empty())
        throw Error(ErrorCode::Configuration, "a channel needs at least one path");
    MultipathChannel out{};
    out.h.assign(static_cast<std::size_t>(cfg.num_antennas()), cdouble{});
    for (const auto& p : paths) {
        const auto a = steering(cfg, p.location, model);
        for (std::size_t m = 0; m < out.h.size(); ++m)
            out.h[m] += p.gain * a[m];
        const auto c = surrogate_coords(cfg, p.location);
        out.paths.push_back({c.theta, c.s_hat, p.gain});
    }
    return out;
}

MultipathChannel build_channel(const ArrayConfig& cfg, std::span<const Atom> paths) {
    if (paths.empty())
        throw Error(ErrorCode::Configuration, "a channel needs at least one path");
    for (const auto& p : paths)
        if (!(std::abs(p.theta) <= 1.0) || !(p.s_hat >= 0.0))
            throw Error(ErrorCode::InvalidCoordinate, "path coordinates outside the beamspace");
    return {std::vector<Atom>(paths.begin(), paths.end()), synthesize(paths, cfg)};
}

EstimationReport omp_estimate(std::span<const cdouble> y, const BeamspaceGrid& grid, const ArrayConfig& cfg,
                              StopRule stop) {
    const auto n = static_cast<std::size_t>(cfg.num_antennas());
    if (y.size() != n)
        throw Error(ErrorCode::Shape, "observation length does not match the array");
    if (grid.angle_count() < cfg.num_antennas())
        throw Error(ErrorCode::Resolution, "OMP needs A >= N");
    if (stop.paths && *stop.paths < 1)
        throw Error(ErrorCode::Configuration, "path budget must be positive");

    const int budget = stop.paths ? std::min(*stop.paths, cfg.num_antennas())
                                  : std::min<int>(cfg.num_antennas(), static_cast<int>(grid.size()));

    EstimationReport out{};
    std::vector<cdouble> residual(y.begin(), y.end());
    std::set<GridCell> used;
    Eigen::MatrixXcd dict(static_cast<Eigen::Index>(n), 0);
    Eigen::Map<const Eigen::VectorXcd> target(y.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXcd coef;

    double rnorm = norm(residual);
    while (out.iterations < budget && rnorm > stop.residual) {
        const auto corr = beamspace_fast(residual, grid, cfg);
        GridCell pick{-1, -1};
        double best = -1.0;
        for (int l = 0; l < grid.row_count(); ++l)
            for (int k = 0; k < grid.angle_count(); ++k) {
                if (used.contains({l, k}))
                    continue;
                const double g = corr.gain(l, k);
                if (g > best) {
                    best = g;
                    pick = {l, k};
                }
            }
        if (pick.row < 0)
            break;
        used.insert(pick);
        out.support.push_back(pick);

        const auto b = frft_basis(cfg, grid.theta(pick.angle), grid.s_hat(pick.row));
        dict.conservativeResize(Eigen::NoChange, dict.cols() + 1);
        for (std::size_t m = 0; m < n; ++m)
            dict(static_cast<Eigen::Index>(m), dict.cols() - 1) = b[m];

        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(dict);
        qr.setThreshold(1e-10);
        if (qr.rank() < dict.cols())
            throw Error(ErrorCode::DuplicateAtom, "selected atoms are linearly dependent (cell row " +
                                                      std::to_string(pick.row) + ", angle " +
                                                      std::to_string(pick.angle) + ")");
        coef = qr.solve(target);
        const Eigen::VectorXcd r = target - dict * coef;
        for (std::size_t m = 0; m < n; ++m)
            residual[m] = r(static_cast<Eigen::Index>(m));
        rnorm = r.norm();
        out.residual_norms.push_back(rnorm);
        ++out.iterations;
    }

    out.estimate.assign(n, cdouble{});
    for (std::size_t i = 0; i < out.support.size(); ++i) {
        const auto& c = out.support[i];
        const cdouble g = coef(static_cast<Eigen::Index>(i));
        out.atoms.push_back({grid.theta(c.angle), grid.s_hat(c.row), g});
        for (std::size_t m = 0; m < n; ++m)
            out.estimate[m] += g * dict(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
    }
    return out;
}

double nmse(std::span<const cdouble> h, std::span<const cdouble> h_hat) {
    if (h.size() != h_hat.size())
        throw Error(ErrorCode::Shape, "nmse of vectors with different lengths");
    double ref = 0.0;
    double err = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        ref += std::norm(h[i]);
        err += std::norm(h_hat[i] - h[i]);
    }
    if (!(ref > 0.0))
        throw Error(ErrorCode::UndefinedReference, "reference channel has zero norm");
    if (!(err > 0.0))
        return kNmseFloor;
    return std::max(kNmseFloor, 10.0 * std::log10(err / ref));
}

} // namespace nfb
