#pragma once

#include "nfb/array_channel.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace nfb {

/// Sampling lattice of the near-field beamspace.
///
/// Angles are uniform on [-1, 1): theta_k = -1 + 2k/A. Surrogate rows are
/// non-negative and strictly increasing; either uniform (s_l = l * s_max / S)
/// or an explicit list.
class BeamspaceGrid {
public:
    static constexpr int kDefaultAngles = 512;
    static constexpr int kDefaultRows = 11;

    BeamspaceGrid(int angle_samples, std::vector<double> s_rows);

    static BeamspaceGrid uniform(int angle_samples, int rows, double s_max);
    /// A = 512, S = 11, s_max = 16 * 11 / N^2 (rows spaced 16/N^2 apart).
    static BeamspaceGrid defaults(const ArrayConfig& cfg);
    static double default_s_max(const ArrayConfig& cfg, int rows = kDefaultRows);

    int angle_count() const noexcept { return angles_; }
    int row_count() const noexcept { return static_cast<int>(rows_.size()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(angles_) * rows_.size(); }

    double theta(int k) const noexcept { return -1.0 + 2.0 * k / angles_; }
    double s_hat(int l) const noexcept { return rows_[static_cast<std::size_t>(l)]; }
    std::span<const double> rows() const noexcept { return rows_; }

    /// Spacing of the angle lattice (2/A).
    double theta_step() const noexcept { return 2.0 / angles_; }

private:
    int angles_;
    std::vector<double> rows_;
};

/// Complex beamspace coefficients c_{l,k} = <basis(theta_k, s_l), x>, row-major in l.
class BeamspaceMap {
public:
    BeamspaceMap(BeamspaceGrid grid, std::vector<cdouble> coefficients);

    const BeamspaceGrid& grid() const noexcept { return grid_; }

    cdouble coeff(int l, int k) const noexcept { return coeffs_[index(l, k)]; }
    double gain(int l, int k) const noexcept { return std::abs(coeff(l, k)); }
    std::span<const cdouble> row(int l) const noexcept;
    std::span<const cdouble> coefficients() const noexcept { return coeffs_; }

    double row_energy(int l) const noexcept;

    struct Peak {
        int row;
        int angle;
        double gain;
    };
    /// Largest gain; ties resolve to the lowest (row, angle) index.
    Peak peak() const noexcept;

private:
    std::size_t index(int l, int k) const noexcept {
        return static_cast<std::size_t>(l) * static_cast<std::size_t>(grid_.angle_count()) + static_cast<std::size_t>(k);
    }

    BeamspaceGrid grid_;
    std::vector<cdouble> coeffs_;
};

/// Quadratic-phase basis vector
/// b_m = exp(j pi delta_m theta (2d/lambda) - j pi delta_m^2 s) / sqrt(N).
/// Requires |theta| <= 1 and s >= 0.
SteeringVector frft_basis(const ArrayConfig& cfg, double theta, double s_hat);

/// Same vector as frft_basis without the domain checks; offsets in the
/// beamspace (negative s, |theta| > 1) are legitimate chirps.
SteeringVector chirp_vector(const ArrayConfig& cfg, double theta, double s_hat);

/// O(S*A*N) reference transform: one explicit inner product per grid point.
BeamspaceMap beamspace_direct(std::span<const cdouble> x, const BeamspaceGrid& grid, const ArrayConfig& cfg);

/// De-chirp each row, then evaluate the angle lattice with a zero-padded FFT
/// (half-wavelength spacing) or a chirp-z transform (any other spacing).
BeamspaceMap beamspace_fast(std::span<const cdouble> x, const BeamspaceGrid& grid, const ArrayConfig& cfg);

struct Atom {
    double theta;
    double s_hat;
    cdouble weight;
};

/// sum_i weight_i * basis(theta_i, s_i)
std::vector<cdouble> synthesize(std::span<const Atom> atoms, const ArrayConfig& cfg);

/// CSV with header s_hat,theta_hat,re,im,gain; one line per grid point.
void write_csv(std::ostream& os, const BeamspaceMap& map);

} // namespace nfb
