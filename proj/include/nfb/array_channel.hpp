#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace nfb {

using cdouble = std::complex<double>;

/// Centered uniform linear array. Element m sits at offset
/// delta_m = m - (N-1)/2 (in units of the spacing) from the array center.
class ArrayConfig {
public:
    /// Spacing defaults to half a wavelength.
    ArrayConfig(int num_antennas, double wavelength, std::optional<double> spacing = std::nullopt);

    int num_antennas() const noexcept { return n_; }
    double wavelength() const noexcept { return wavelength_; }
    double spacing() const noexcept { return spacing_; }
    double aperture() const noexcept { return (n_ - 1) * spacing_; }

    double offset(int m) const noexcept { return m - 0.5 * (n_ - 1); }
    std::span<const double> offsets() const noexcept { return offsets_; }

    /// Linear-phase scale 2d/lambda; 1 at half-wavelength spacing.
    double angle_scale() const noexcept { return 2.0 * spacing_ / wavelength_; }
    bool half_wavelength() const noexcept;

private:
    int n_;
    double wavelength_;
    double spacing_;
    std::vector<double> offsets_;
};

/// Physical position of a point source relative to the array center.
/// theta is the sine of the azimuth measured from broadside.
struct SourceLocation {
    double range;
    double theta;
};

/// Coordinates in the (angle, surrogate distance) beamspace.
struct BeamCoord {
    double theta;
    double s_hat;
};

enum class SteeringKind { Exact, Fresnel, Basis };

struct SteeringVector {
    std::vector<cdouble> elements;
    SteeringKind kind = SteeringKind::Basis;

    std::size_t size() const noexcept { return elements.size(); }
    const cdouble& operator[](std::size_t i) const noexcept { return elements[i]; }
    std::span<const cdouble> span() const noexcept { return elements; }
};

struct FieldBoundaries {
    double rayleigh;
    double fresnel;
};

enum class FieldRegion { ReactiveNear, RadiatingNear, Far };

const char* to_string(FieldRegion region) noexcept;

/// Rayleigh distance 2D^2/lambda and Fresnel distance 0.62 sqrt(D^3/lambda).
FieldBoundaries field_boundaries(const ArrayConfig& cfg);
FieldRegion classify_region(const ArrayConfig& cfg, double range);

enum class ChannelModel { Exact, Fresnel };

/// Spherical-wave response, phase only.
SteeringVector steering_exact(const ArrayConfig& cfg, const SourceLocation& loc);
/// Second-order (Fresnel) expansion of the spherical-wave phase.
SteeringVector steering_fresnel(const ArrayConfig& cfg, const SourceLocation& loc);

SteeringVector steering(const ArrayConfig& cfg, const SourceLocation& loc, ChannelModel model);

BeamCoord surrogate_coords(const ArrayConfig& cfg, const SourceLocation& loc);
/// Inverse of surrogate_coords. s_hat == 0 maps to +infinity.
double range_of(const ArrayConfig& cfg, double theta, double s_hat);

/// <a, b> = sum conj(a_m) b_m
cdouble inner(std::span<const cdouble> a, std::span<const cdouble> b);
double norm(std::span<const cdouble> x);

} // namespace nfb
