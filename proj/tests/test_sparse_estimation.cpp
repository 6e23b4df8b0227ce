#include "nfb/sparse_estimation.hpp"
#include "nfb/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace nfb;

namespace {

std::vector<cdouble> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<cdouble> v(n);
    for (auto& x : v)
        x = {g(rng), g(rng)};
    return v;
}

} // namespace

TEST(BuildChannel, SinglePathIsScaledSteering) {
    ArrayConfig cfg(64, 0.01);
    const SourceLocation loc{5.0, 0.4};
    const PathSpec p{{0.6, -0.8}, loc};
    const auto ch = build_channel(cfg, std::span(&p, 1), ChannelModel::Fresnel);
    const auto a = steering_fresnel(cfg, loc);
    ASSERT_EQ(ch.path_count(), 1u);
    for (std::size_t m = 0; m < 64; ++m)
        EXPECT_NEAR(std::abs(ch.h[m] - p.gain * a[m]), 0.0, 1e-15);
    const auto c = surrogate_coords(cfg, loc);
    EXPECT_DOUBLE_EQ(ch.paths[0].theta, c.theta);
    EXPECT_DOUBLE_EQ(ch.paths[0].s_hat, c.s_hat);
}

TEST(BuildChannel, MirroredPathsEnergy) {
    ArrayConfig cfg(128, 0.01);
    const std::vector<PathSpec> ps{{1.0, {12.0, 0.3}}, {1.0, {12.0, -0.3}}};
    const auto ch = build_channel(cfg, ps, ChannelModel::Exact);
    const auto a1 = steering_exact(cfg, ps[0].location);
    const auto a2 = steering_exact(cfg, ps[1].location);
    const double n2 = std::pow(norm(ch.h), 2);
    // unit-norm steering vectors
    EXPECT_NEAR(n2, 2.0 * (1.0 + inner(a1.span(), a2.span()).real()), 1e-10);
}

TEST(BuildChannel, AtomsPeakAtTheirCells) {
    ArrayConfig cfg(128, 0.01);
    const auto grid = BeamspaceGrid::uniform(256, 8, 8 * 20.0 / (128 * 128));
    const std::vector<Atom> atoms{{grid.theta(40), grid.s_hat(2), {1, 0}},
                                  {grid.theta(130), grid.s_hat(5), {0, 1}},
                                  {grid.theta(210), grid.s_hat(0), {-0.7, 0.7}}};
    const auto ch = build_channel(cfg, atoms);
    const auto map = beamspace_fast(ch.h, grid, cfg);
    for (const auto& [l, k] : {std::pair{2, 40}, {5, 130}, {0, 210}}) {
        const double g = map.gain(l, k);
        for (int dl = -1; dl <= 1; ++dl)
            for (int dk = -1; dk <= 1; ++dk) {
                if (dl == 0 && dk == 0)
                    continue;
                const int ll = l + dl;
                if (ll < 0 || ll >= grid.row_count())
                    continue;
                EXPECT_GT(g, map.gain(ll, (k + dk + 256) % 256)) << l << " " << k;
            }
    }
}

TEST(BuildChannel, Errors) {
    ArrayConfig cfg(16, 0.01);
    EXPECT_THROW(build_channel(cfg, std::span<const Atom>{}), Error);
    EXPECT_THROW(build_channel(cfg, std::span<const PathSpec>{}, ChannelModel::Exact), Error);
    const Atom bad{1.2, 0.0, 1.0};
    try {
        build_channel(cfg, std::span(&bad, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidCoordinate);
    }
}

TEST(Omp, SingleOnGridPathIsExact) {
    ArrayConfig cfg(64, 0.01);
    const auto grid = BeamspaceGrid::uniform(128, 6, 6 * 16.0 / (64 * 64));
    const Atom a{grid.theta(77), grid.s_hat(3), {0.3, -1.1}};
    const auto ch = build_channel(cfg, std::span(&a, 1));
    const auto rep = omp_estimate(ch.h, grid, cfg, {1});
    ASSERT_EQ(rep.support.size(), 1u);
    EXPECT_EQ(rep.support[0], (GridCell{3, 77}));
    EXPECT_LE(nmse(ch.h, rep.estimate), -120.0);
    EXPECT_NEAR(std::abs(rep.atoms[0].weight - a.weight), 0.0, 1e-10);
}

TEST(Omp, ResidualIsNonIncreasing) {
    ArrayConfig cfg(64, 0.01);
    const auto grid = BeamspaceGrid::uniform(128, 6, 6 * 16.0 / (64 * 64));
    const auto y = random_vector(64, 11);
    const auto rep = omp_estimate(y, grid, cfg, {12});
    ASSERT_EQ(rep.iterations, 12);
    double prev = norm(y);
    for (double r : rep.residual_norms) {
        EXPECT_LE(r, prev + 1e-12);
        prev = r;
    }
    auto s = rep.support;
    std::sort(s.begin(), s.end());
    EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
}

TEST(Omp, ResidualStopRule) {
    ArrayConfig cfg(64, 0.01);
    const auto grid = BeamspaceGrid::uniform(128, 6, 6 * 16.0 / (64 * 64));
    const std::vector<Atom> atoms{{grid.theta(10), grid.s_hat(1), 1.0}, {grid.theta(90), grid.s_hat(4), 0.5}};
    const auto ch = build_channel(cfg, atoms);
    const auto rep = omp_estimate(ch.h, grid, cfg, {std::nullopt, 1e-9});
    EXPECT_EQ(rep.iterations, 2);
}

TEST(Omp, ShiftEquivariance) {
    ArrayConfig cfg(128, 0.01);
    const auto grid = BeamspaceGrid::uniform(256, 6, 6 * 16.0 / (128 * 128));
    auto cells = std::vector<GridCell>{{1, 20}, {4, 100}, {2, 180}};
    std::vector<Atom> a0, a1;
    for (const auto& c : cells) {
        a0.push_back({grid.theta(c.angle), grid.s_hat(c.row), {1.0, 0.2}});
        a1.push_back({grid.theta(c.angle + 1), grid.s_hat(c.row), {1.0, 0.2}});
    }
    const auto r0 = omp_estimate(build_channel(cfg, a0).h, grid, cfg, {3});
    const auto r1 = omp_estimate(build_channel(cfg, a1).h, grid, cfg, {3});
    auto s0 = r0.support, s1 = r1.support;
    std::sort(s0.begin(), s0.end());
    std::sort(s1.begin(), s1.end());
    ASSERT_EQ(s0.size(), s1.size());
    for (std::size_t i = 0; i < s0.size(); ++i) {
        EXPECT_EQ(s1[i].row, s0[i].row);
        EXPECT_EQ(s1[i].angle, s0[i].angle + 1);
    }
}

TEST(Omp, FarFieldRowRecovery) {
    ArrayConfig cfg(64, 0.01);
    const auto grid = BeamspaceGrid::uniform(64, 4, 4 * 16.0 / (64 * 64));
    const std::vector<Atom> atoms{{grid.theta(5), 0.0, 1.0}, {grid.theta(40), 0.0, {0, -2}}};
    const auto ch = build_channel(cfg, atoms);
    const auto rep = omp_estimate(ch.h, grid, cfg, {2});
    for (const auto& c : rep.support)
        EXPECT_EQ(c.row, 0);
    EXPECT_LE(nmse(ch.h, rep.estimate), -120.0);
}

TEST(Omp, Errors) {
    ArrayConfig cfg(64, 0.01);
    const auto grid = BeamspaceGrid::uniform(128, 6, 6 * 16.0 / (64 * 64));
    const auto y = random_vector(63, 1);
    try {
        omp_estimate(y, grid, cfg, {1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Shape);
    }
    const auto y64 = random_vector(64, 1);
    try {
        omp_estimate(y64, BeamspaceGrid::uniform(32, 2, 0.001), cfg, {1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Resolution);
    }
}

TEST(Omp, DependentAtomsAreReported) {
    // d = lambda: theta and theta + 1 give the same vector, so the lattice
    // holds each column twice
    ArrayConfig cfg(8, 0.01, 0.01);
    const BeamspaceGrid grid(8, {0.0});
    const auto y = random_vector(8, 5);
    try {
        omp_estimate(y, grid, cfg, {8});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateAtom);
    }
}

TEST(Nmse, Examples) {
    const std::vector<cdouble> h{{1, 0}, {0, 1}, {-1, 0}};
    EXPECT_DOUBLE_EQ(nmse(h, h), kNmseFloor);
    const std::vector<cdouble> zero(3);
    EXPECT_NEAR(nmse(h, zero), 0.0, 1e-12);
    std::vector<cdouble> scaled;
    for (auto x : h)
        scaled.push_back(1.1 * x);
    EXPECT_NEAR(nmse(h, scaled), -20.0, 1e-9);
    try {
        nmse(zero, h);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UndefinedReference);
    }
    EXPECT_THROW(nmse(h, std::vector<cdouble>(2)), Error);
}
