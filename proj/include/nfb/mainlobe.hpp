#pragma once

#include "nfb/array_channel.hpp"
#include "nfb/beamspace.hpp"

#include <span>
#include <vector>

namespace nfb {

enum class Axis { Angle, Surrogate };

const char* to_string(Axis axis) noexcept;

struct ProfileSample {
    double coord;
    double gain;
};

/// Gain profile along one beamspace axis through a focused location.
struct CrossSection {
    Axis axis;
    double fixed;       ///< coordinate held constant along the cut
    std::vector<ProfileSample> samples;
    double resolution;
};

/// |<basis, steering_fresnel(center)>| along `axis`, sampled symmetrically
/// about the center (the center itself is always a sample).
CrossSection cross_section(const ArrayConfig& cfg, BeamCoord center, Axis axis, double halfwidth, double resolution);

/// Distance between the 1/sqrt(2) crossings adjacent to the profile peak,
/// each found by linear interpolation.
double width_3db(const CrossSection& profile);

struct HighMainlobeWidths {
    double angle;      ///< 2/N
    double surrogate;  ///< 7/N^2
    bool validated;    ///< false unless d = lambda/2
};

HighMainlobeWidths predict_high_mainlobe_widths(const ArrayConfig& cfg);

struct GainSample {
    double theta;
    double s_hat;
    double gain;
};

/// Axis-aligned Gaussian model of the high mainlobe in amplitude gain:
/// G = g0 * exp(-dtheta^2 / (2 sigma_theta^2) - ds^2 / (2 sigma_s^2)).
struct MainlobeFit {
    BeamCoord center;
    double peak_gain;
    double sigma_theta;
    double sigma_s;
    double mean_abs_dev;        ///< mean |G - G_fit| over the fit region
    double mean_abs_dev_power;  ///< same, on |c|^2

    double evaluate(double theta, double s_hat) const noexcept;
    /// Full width where the fitted amplitude drops to peak/sqrt(2): 2 sigma sqrt(ln 2).
    double width_3db_theta() const noexcept;
    double width_3db_s() const noexcept;
};

/// Connected region around `center` where the power gain |c|^2 of a focused
/// Fresnel input is at least `power_threshold`, sampled on a lattice with
/// the given steps (flood fill, 4-neighbour).
std::vector<GainSample> sample_mainlobe(const ArrayConfig& cfg, BeamCoord center, double power_threshold,
                                        double theta_step, double s_step);

/// Least-squares fit of ln G to a separable quadratic in (theta, s).
MainlobeFit gaussian_fit(std::span<const GainSample> region);

/// Fit over the half-power region of a broadside focus, sampled at 1/40 of
/// the predicted widths. The fit only depends on coordinate differences.
MainlobeFit fit_high_mainlobe(const ArrayConfig& cfg, double power_threshold = 0.5);

struct Ellipse {
    BeamCoord center;
    double semi_theta;
    double semi_s;
};

Ellipse contour_ellipse(const MainlobeFit& fit, double level);

struct PspPrediction {
    double ds;
    double width;
    double average_gain;
};

/// Stationary-phase plateau of the low mainlobe: width 2 N ds, gain 1/(N sqrt(ds)).
/// Valid only for ds >= kPspFloor / N^2.
PspPrediction psp_predict(const ArrayConfig& cfg, double ds);
inline constexpr double kPspFloor = 20.0;

struct LowMainlobeMeasurement {
    double ds;
    double width;
    double average_gain;
    double plateau_gain;  ///< mean over the central half of the extent
    double left;          ///< angle offsets of the half-plateau crossings
    double right;
};

/// Brute-force measurement of the low mainlobe of a focused input viewed at
/// surrogate offset ds. The extent is where the gain is at least half the
/// plateau level, the plateau level being the mean over the central half of
/// the extent (iterated to a fixed point).
LowMainlobeMeasurement low_mainlobe_measure(const ArrayConfig& cfg, double ds, double resolution);

struct EnergySplit {
    double high;
    double low;
    double side;
    double total;
};

/// Per-map partition of |c|^2: high = connected gain >= 1/sqrt(2) region
/// around the global peak, low = plateau extent on each row, side = rest.
EnergySplit energy_split(const BeamspaceMap& map);

namespace detail {

struct Extent {
    std::size_t lo;
    std::size_t hi;
    double level;
    double plateau;
};

/// Fixed-point plateau extent on a sampled profile; throws Validity when the
/// extent touches either end or never settles.
Extent plateau_extent(std::span<const double> gains);

} // namespace detail

} // namespace nfb
