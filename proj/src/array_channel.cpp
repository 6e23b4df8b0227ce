#include "nfb/array_channel.hpp"

#include "nfb/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace nfb {

namespace {

void check_location(const SourceLocation& loc) {
    if (!(loc.range > 0.0) || !std::isfinite(loc.range))
        throw Error(ErrorCode::InvalidLocation, "range must be positive and finite, got " + std::to_string(loc.range));
    if (!(std::abs(loc.theta) < 1.0))
        throw Error(ErrorCode::InvalidLocation, "theta must lie in (-1, 1), got " + std::to_string(loc.theta));
}

} // namespace

ArrayConfig::ArrayConfig(int num_antennas, double wavelength, std::optional<double> spacing)
    : n_(num_antennas), wavelength_(wavelength), spacing_(spacing.value_or(0.5 * wavelength)) {
    if (n_ < 1)
        throw Error(ErrorCode::Configuration, "num_antennas must be at least 1");
    if (!(wavelength_ > 0.0) || !std::isfinite(wavelength_))
        throw Error(ErrorCode::Configuration, "wavelength must be positive");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
        throw Error(ErrorCode::Configuration, "spacing must be positive");
    offsets_.resize(static_cast<std::size_t>(n_));
    for (int m = 0; m < n_; ++m)
        offsets_[static_cast<std::size_t>(m)] = offset(m);
}

bool ArrayConfig::half_wavelength() const noexcept {
    return std::abs(angle_scale() - 1.0) < 1e-12;
}

const char* to_string(FieldRegion region) noexcept {
    switch (region) {
    case FieldRegion::ReactiveNear: return "reactive-near";
    case FieldRegion::RadiatingNear: return "radiating-near";
    case FieldRegion::Far: return "far";
    }
    return "unknown";
}

FieldBoundaries field_boundaries(const ArrayConfig& cfg) {
    if (cfg.num_antennas() < 2)
        throw Error(ErrorCode::DegenerateAperture, "field boundaries need at least two antennas");
    const double D = cfg.aperture();
    const double lambda = cfg.wavelength();
    return {2.0 * D * D / lambda, 0.62 * std::sqrt(D * D * D / lambda)};
}

FieldRegion classify_region(const ArrayConfig& cfg, double range) {
    if (!(range > 0.0))
        throw Error(ErrorCode::InvalidRange, "range must be positive");
    const auto b = field_boundaries(cfg);
    if (range >= b.rayleigh)
        return FieldRegion::Far;
    if (range < b.fresnel)
        return FieldRegion::ReactiveNear;
    return FieldRegion::RadiatingNear;
}

SteeringVector steering_exact(const ArrayConfig& cfg, const SourceLocation& loc) {
    check_location(loc);
    const auto n = static_cast<std::size_t>(cfg.num_antennas());
    const double k = 2.0 * std::numbers::pi / cfg.wavelength();
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    const double r = loc.range;

    SteeringVector out{std::vector<cdouble>(n), SteeringKind::Exact};
    for (std::size_t m = 0; m < n; ++m) {
        const double x = cfg.offsets()[m] * cfg.spacing();
        const double rm = std::sqrt(r * r - 2.0 * r * x * loc.theta + x * x);
        // r_m - r without cancellation at large range
        const double path = (x * x - 2.0 * r * x * loc.theta) / (rm + r);
        out.elements[m] = std::polar(amp, -k * path);
    }
    return out;
}

SteeringVector steering_fresnel(const ArrayConfig& cfg, const SourceLocation& loc) {
    check_location(loc);
    const auto c = surrogate_coords(cfg, loc);
    const auto n = static_cast<std::size_t>(cfg.num_antennas());
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    const double lin = std::numbers::pi * c.theta * cfg.angle_scale();
    const double quad = std::numbers::pi * c.s_hat;

    SteeringVector out{std::vector<cdouble>(n), SteeringKind::Fresnel};
    for (std::size_t m = 0; m < n; ++m) {
        const double dm = cfg.offsets()[m];
        out.elements[m] = std::polar(amp, lin * dm - quad * dm * dm);
    }
    return out;
}

SteeringVector steering(const ArrayConfig& cfg, const SourceLocation& loc, ChannelModel model) {
    return model == ChannelModel::Exact ? steering_exact(cfg, loc) : steering_fresnel(cfg, loc);
}

BeamCoord surrogate_coords(const ArrayConfig& cfg, const SourceLocation& loc) {
    if (!(loc.range > 0.0))
        throw Error(ErrorCode::InvalidRange, "range must be positive");
    const double d = cfg.spacing();
    if (std::isinf(loc.range))
        return {loc.theta, 0.0};
    return {loc.theta, d * d * (1.0 - loc.theta * loc.theta) / (cfg.wavelength() * loc.range)};
}

double range_of(const ArrayConfig& cfg, double theta, double s_hat) {
    if (!(s_hat >= 0.0))
        throw Error(ErrorCode::InvalidCoordinate, "surrogate distance must be non-negative");
    if (s_hat == 0.0)
        return std::numeric_limits<double>::infinity();
    const double d = cfg.spacing();
    return d * d * (1.0 - theta * theta) / (cfg.wavelength() * s_hat);
}

cdouble inner(std::span<const cdouble> a, std::span<const cdouble> b) {
    if (a.size() != b.size())
        throw Error(ErrorCode::Shape, "inner product of vectors with different lengths");
    cdouble acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::conj(a[i]) * b[i];
    return acc;
}

double norm(std::span<const cdouble> x) {
    double acc = 0.0;
    for (const auto& v : x)
        acc += std::norm(v);
    return std::sqrt(acc);
}

} // namespace nfb
