#include "nfb/array_channel.hpp"
#include "nfb/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace nfb;

namespace {

constexpr double kPi = std::numbers::pi;

// Element positions and distances computed from scratch, no shared helpers.
std::vector<cdouble> spherical_oracle(int n, double lambda, double d, double r, double theta) {
    std::vector<cdouble> a(static_cast<std::size_t>(n));
    const double px = r * theta;
    const double py = r * std::sqrt(1.0 - theta * theta);
    for (int m = 0; m < n; ++m) {
        const double x = (m - (n - 1) / 2.0) * d;
        const long double dist = std::hypot(static_cast<long double>(px - x), static_cast<long double>(py));
        const long double phase = -2.0L * kPi / lambda * (dist - r);
        a[static_cast<std::size_t>(m)] = std::polar(1.0 / std::sqrt(n), static_cast<double>(phase));
    }
    return a;
}

} // namespace

TEST(ArrayConfig, OffsetsAreCentered) {
    ArrayConfig cfg(4, 0.01);
    EXPECT_DOUBLE_EQ(cfg.offset(0), -1.5);
    EXPECT_DOUBLE_EQ(cfg.offset(3), 1.5);
    EXPECT_DOUBLE_EQ(cfg.spacing(), 0.005);
    EXPECT_TRUE(cfg.half_wavelength());
    EXPECT_DOUBLE_EQ(cfg.aperture(), 0.015);
}

TEST(ArrayConfig, RejectsBadParameters) {
    EXPECT_THROW(ArrayConfig(0, 0.01), Error);
    EXPECT_THROW(ArrayConfig(8, -1.0), Error);
    EXPECT_THROW(ArrayConfig(8, 0.01, 0.0), Error);
}

TEST(FieldBoundaries, DefaultArray) {
    ArrayConfig cfg(512, 0.01);
    const auto b = field_boundaries(cfg);
    const double D = 511 * 0.005;
    EXPECT_NEAR(b.rayleigh, 2 * D * D / 0.01, 1e-9);
    EXPECT_NEAR(b.rayleigh, 1305.6, 0.1);
    EXPECT_NEAR(b.fresnel, 25.3, 0.05);
    EXPECT_EQ(classify_region(cfg, 10.0), FieldRegion::ReactiveNear);
    EXPECT_EQ(classify_region(cfg, 100.0), FieldRegion::RadiatingNear);
    EXPECT_EQ(classify_region(cfg, 2000.0), FieldRegion::Far);
    EXPECT_EQ(classify_region(cfg, b.rayleigh), FieldRegion::Far);
}

TEST(FieldBoundaries, SingleAntennaIsDegenerate) {
    try {
        field_boundaries(ArrayConfig(1, 0.01));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateAperture);
    }
    EXPECT_THROW(classify_region(ArrayConfig(8, 0.01), 0.0), Error);
}

TEST(Steering, ExactMatchesGeometricOracle) {
    for (double r : {3.0, 30.0, 300.0, 3000.0})
        for (double th : {-0.8, 0.0, 0.37}) {
            ArrayConfig cfg(64, 0.01);
            const auto a = steering_exact(cfg, {r, th});
            const auto o = spherical_oracle(64, 0.01, 0.005, r, th);
            for (std::size_t m = 0; m < o.size(); ++m)
                EXPECT_NEAR(std::abs(a[m] - o[m]), 0.0, 1e-9) << r << " " << th << " " << m;
        }
}

TEST(Steering, UnitNorm) {
    ArrayConfig cfg(128, 0.01);
    EXPECT_NEAR(norm(steering_exact(cfg, {12.0, 0.2}).span()), 1.0, 1e-12);
    EXPECT_NEAR(norm(steering_fresnel(cfg, {12.0, 0.2}).span()), 1.0, 1e-12);
}

TEST(Steering, FresnelApproachesExactWithRange) {
    ArrayConfig cfg(256, 0.01);
    double prev = 2.0;
    for (double r : {10.0, 40.0, 160.0, 640.0}) {
        const auto e = steering_exact(cfg, {r, 0.3});
        const auto f = steering_fresnel(cfg, {r, 0.3});
        const double corr = std::abs(inner(e.span(), f.span()));
        EXPECT_LE(1.0 - corr, prev);
        prev = 1.0 - corr;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(Steering, FresnelPhaseIsSecondOrderExpansion) {
    ArrayConfig cfg(16, 0.02, 0.007);
    const double r = 5.0;
    const double th = -0.4;
    const auto f = steering_fresnel(cfg, {r, th});
    const double k = 2 * kPi / 0.02;
    for (int m = 0; m < 16; ++m) {
        const double x = (m - 7.5) * 0.007;
        const double ph = -k * (-x * th + x * x * (1 - th * th) / (2 * r));
        EXPECT_NEAR(std::abs(f[static_cast<std::size_t>(m)] - std::polar(0.25, ph)), 0.0, 1e-12);
    }
}

TEST(Steering, InvalidLocations) {
    ArrayConfig cfg(8, 0.01);
    for (SourceLocation bad : {SourceLocation{0.0, 0.1}, SourceLocation{-2.0, 0.1}, SourceLocation{10.0, 1.0},
                               SourceLocation{10.0, -1.2}, SourceLocation{INFINITY, 0.0}}) {
        try {
            steering_exact(cfg, bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidLocation);
        }
        EXPECT_THROW(steering_fresnel(cfg, bad), Error);
    }
}

TEST(Surrogate, RoundTripAndFarField) {
    ArrayConfig cfg(512, 0.01);
    for (double r : {26.0, 100.0, 1000.0})
        for (double th : {-0.9, 0.0, 0.5}) {
            const auto c = surrogate_coords(cfg, {r, th});
            EXPECT_NEAR(c.s_hat, 0.005 * 0.005 * (1 - th * th) / (0.01 * r), 1e-18);
            EXPECT_NEAR(range_of(cfg, c.theta, c.s_hat), r, 1e-9 * r);
        }
    EXPECT_EQ(surrogate_coords(cfg, {INFINITY, 0.2}).s_hat, 0.0);
    EXPECT_TRUE(std::isinf(range_of(cfg, 0.2, 0.0)));
    EXPECT_THROW(range_of(cfg, 0.2, -1e-6), Error);
    EXPECT_THROW(surrogate_coords(cfg, {0.0, 0.0}), Error);
}

TEST(Surrogate, MonotoneInInverseRange) {
    ArrayConfig cfg(64, 0.01);
    EXPECT_GT(surrogate_coords(cfg, {5.0, 0.3}).s_hat, surrogate_coords(cfg, {6.0, 0.3}).s_hat);
}

TEST(Inner, ShapeMismatch) {
    std::vector<cdouble> a(3), b(4);
    try {
        inner(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Shape);
    }
}
