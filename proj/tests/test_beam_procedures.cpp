#include "nfb/beam_procedures.hpp"
#include "nfb/error.hpp"
#include "nfb/experiment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nfb;

namespace {

double gain_at(const ArrayConfig& cfg, BeamCoord c, std::span<const cdouble> h) {
    return std::abs(inner(chirp_vector(cfg, c.theta, c.s_hat).span(), h));
}

const ArrayConfig& cfg512() {
    static const ArrayConfig cfg(512, 0.01);
    return cfg;
}

const HierarchicalTrainer& trainer512() {
    static const HierarchicalTrainer t(cfg512());
    return t;
}

} // namespace

TEST(Codebook, PolarDefaults) {
    const auto& cfg = cfg512();
    const auto book = polar_codebook(cfg);
    ASSERT_EQ(book.size(), 5632u);
    ASSERT_TRUE(book.lattice.has_value());
    for (std::size_t i = 0; i < book.size(); i += 397) {
        const auto& w = book.words[i];
        EXPECT_NEAR(norm(w.weights.span()), 1.0, 1e-12);
        EXPECT_EQ(w.stage, Stage::Exhaustive);
        if (w.label.s_hat > 0 && std::abs(w.label.theta) < 1) {
            const double r = range_of(cfg, w.label.theta, w.label.s_hat);
            const auto a = steering_fresnel(cfg, {r, w.label.theta});
            EXPECT_NEAR(std::abs(inner(w.weights.span(), a.span())), 1.0, 1e-9);
        }
    }
}

TEST(Codebook, PolarSingleWord) {
    const auto book = polar_codebook(ArrayConfig(16, 0.01), 1, 1);
    ASSERT_EQ(book.size(), 1u);
    EXPECT_DOUBLE_EQ(book.words[0].label.s_hat, 0.0);
    EXPECT_DOUBLE_EQ(book.words[0].label.theta, -1.0);
    EXPECT_THROW(polar_codebook(ArrayConfig(16, 0.01), 0, 1), Error);
}

TEST(Codebook, ChirpConstruction) {
    ArrayConfig cfg(256, 0.01);
    const auto book = chirp_codebook(cfg, 8, 1e-4);
    ASSERT_EQ(book.size(), 8u);
    for (int k = 0; k < 8; ++k) {
        EXPECT_DOUBLE_EQ(book.words[static_cast<std::size_t>(k)].label.theta, -1.0 + (2.0 * k + 1.0) / 8);
        EXPECT_NEAR(book.words[static_cast<std::size_t>(k)].label.s_hat, 1e-4 + 1.0 / (8 * 256), 1e-15);
        EXPECT_EQ(book.words[static_cast<std::size_t>(k)].stage, Stage::Coarse);
    }
    const auto two = chirp_codebook(cfg, 2);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_DOUBLE_EQ(two.words[0].label.theta, -0.5);
    EXPECT_DOUBLE_EQ(two.words[1].label.theta, 0.5);
    try {
        chirp_codebook(cfg, 257);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OverResolved);
    }
    EXPECT_THROW(chirp_codebook(cfg, 1), Error);
}

TEST(Codebook, ChirpLobesTileTheAngleRange) {
    ArrayConfig cfg(256, 0.01);
    const double n = 256;
    const double res = 1 / (8 * n);
    const auto lobe = low_mainlobe_measure(cfg, coarse_offset(cfg, 8), res);
    EXPECT_NEAR(lobe.width, 0.25, 1 / n + res);
    // every lobe is the same shape shifted to its centre; edges meet the neighbours
    EXPECT_NEAR(lobe.left, -0.125, 1 / n + res);
    EXPECT_NEAR(lobe.right, 0.125, 1 / n + res);
    EXPECT_GE(8 * lobe.width, 2.0 - 8 * (1 / n + res));
}

TEST(Codebook, ChirpSeamGains) {
    ArrayConfig cfg(256, 0.01);
    const double probe = 5e-4;
    const auto book = chirp_codebook(cfg, 8, probe);
    const double plateau = psp_predict(cfg, coarse_offset(cfg, 8)).average_gain;
    double worst = 1.0;
    for (double t = -0.99; t < 0.99; t += 1.0 / (4 * 256)) {
        const auto user = chirp_vector(cfg, t, probe);
        double best = 0;
        for (const auto& w : book.words)
            best = std::max(best, std::abs(inner(w.weights.span(), user.span())));
        worst = std::min(worst, best);
    }
    EXPECT_GE(worst, 0.4 * plateau);
    for (int k = 0; k + 1 < 8; ++k) {
        const auto user = chirp_vector(cfg, -1.0 + 2.0 * (k + 1) / 8, probe);
        const double a = std::abs(inner(book.words[static_cast<std::size_t>(k)].weights.span(), user.span()));
        const double b = std::abs(inner(book.words[static_cast<std::size_t>(k + 1)].weights.span(), user.span()));
        EXPECT_LE(std::abs(20 * std::log10(a / b)), 3.0) << k;
    }
}

TEST(Codebook, ChirpKeepsRowEnergy) {
    ArrayConfig cfg(128, 0.01);
    const auto grid = BeamspaceGrid::uniform(256, 11, 11 * 16.0 / (128 * 128));
    const auto coarse = chirp_codebook(cfg, 8).words[2].weights;
    const auto focused = frft_basis(cfg, 0.3, grid.s_hat(4));
    const auto mc = beamspace_fast(coarse.span(), grid, cfg);
    const auto mf = beamspace_fast(focused.span(), grid, cfg);
    for (int l = 0; l < 11; ++l)
        EXPECT_NEAR(mc.row_energy(l), mf.row_energy(l), 1e-12);
}

TEST(Exhaustive, OnGridNoiseless) {
    const auto& cfg = cfg512();
    const auto book = polar_codebook(cfg);
    const auto& target = book.words[3 * 512 + 301];
    auto mm = MeasurementModel::noiseless();
    const auto res = train_exhaustive(target.weights.span(), book, cfg, mm);
    EXPECT_DOUBLE_EQ(res.selected.theta, target.label.theta);
    EXPECT_DOUBLE_EQ(res.selected.s_hat, target.label.s_hat);
    EXPECT_NEAR(res.gain_ratio, 1.0, 1e-12);
    EXPECT_EQ(res.pilots, 5632u);
    EXPECT_EQ(res.log.size(), res.pilots);
    EXPECT_EQ(mm.draws(), res.pilots);
}

TEST(Exhaustive, NoisyPilotsMatchDraws) {
    const auto& cfg = cfg512();
    const auto book = polar_codebook(cfg);
    const auto h = steering_exact(cfg, {60.0, -0.21});
    MeasurementModel mm(10.0, 42);
    const auto res = train_exhaustive(h.span(), book, cfg, mm);
    EXPECT_EQ(mm.draws(), 5632u);
    EXPECT_GE(res.gain_ratio, 0.95);
    EXPECT_LE(res.gain_ratio, 1.0 + 1e-12);
}

TEST(Exhaustive, TieBreakLowestIndex) {
    ArrayConfig cfg(16, 0.01);
    Codebook book;
    const auto w = frft_basis(cfg, 0.25, 0.0);
    for (int i = 0; i < 3; ++i)
        book.words.push_back({w, {0.25, 0.001 * i}, Stage::Exhaustive});
    auto mm = MeasurementModel::noiseless();
    const auto res = train_exhaustive(w.span(), book, cfg, mm);
    EXPECT_DOUBLE_EQ(res.selected.s_hat, 0.0);
    EXPECT_THROW(train_exhaustive(w.span(), Codebook{}, cfg, mm), Error);
}

TEST(Hierarchical, PilotBudgetAndLog) {
    const auto& cfg = cfg512();
    const auto h = steering_exact(cfg, {80.0, 0.43});
    MeasurementModel mm(10.0, 3);
    const auto res = trainer512().train(h.span(), mm);
    EXPECT_EQ(res.pilots, 15u);
    EXPECT_EQ(mm.draws(), 15u);
    ASSERT_EQ(res.log.size(), 15u);
    for (std::size_t i = 0; i < 15; ++i)
        EXPECT_EQ(res.log[i].stage, i < 8 ? Stage::Coarse : Stage::Fine);
    EXPECT_GE(res.gain_ratio, 0.95);
}

TEST(Hierarchical, NoiselessIsSeedIndependent) {
    const auto& cfg = cfg512();
    const auto h = steering_exact(cfg, {33.0, -0.61});
    MeasurementModel a(MeasurementModel::kNoiseless, 1);
    MeasurementModel b(MeasurementModel::kNoiseless, 999);
    const auto ra = trainer512().train(h.span(), a);
    const auto rb = trainer512().train(h.span(), b);
    EXPECT_EQ(ra.selected.theta, rb.selected.theta);
    EXPECT_EQ(ra.selected.s_hat, rb.selected.s_hat);
    EXPECT_EQ(ra.gain_ratio, rb.gain_ratio);
}

TEST(Hierarchical, SectorCenterUser) {
    const auto& cfg = cfg512();
    const auto grid = BeamspaceGrid::defaults(cfg);
    // theta = 0.375 is the centre of sector 5, row 1 is on the exhaustive grid
    const auto h = frft_basis(cfg, 0.375, grid.s_hat(1));
    auto mm = MeasurementModel::noiseless();
    const auto res = train_hierarchical(h.span(), cfg, mm);
    EXPECT_GE(res.gain_ratio, 0.9);
    EXPECT_NEAR(res.selected.theta, 0.375, 1.0 / 512);
    EXPECT_EQ(res.pilots, 15u);
}

TEST(Hierarchical, SeamUsersInTheNearField) {
    const auto& cfg = cfg512();
    for (double th : {-0.25, 0.0, 0.25, 0.5})
        for (double r : {27.0, 35.0}) {
            const auto h = steering_exact(cfg, {r, th});
            MeasurementModel mm(10.0, 17);
            const auto res = trainer512().train(h.span(), mm);
            EXPECT_GE(res.gain_ratio, 0.95) << th << " " << r;
        }
}

TEST(FineLayout, Sizes) {
    EXPECT_EQ(fine_layout(7).size(), 7u);
    EXPECT_EQ(fine_layout(3).size(), 3u);
    EXPECT_EQ(fine_layout(10).size(), 10u);
    EXPECT_THROW(fine_layout(0), Error);
    const HierarchicalTrainer t(ArrayConfig(128, 0.01), {4, 3});
    const auto h = steering_exact(ArrayConfig(128, 0.01), {20.0, 0.1});
    auto mm = MeasurementModel::noiseless();
    EXPECT_EQ(t.train(h.span(), mm).pilots, 7u);
}

TEST(RefineGaussian, SymmetricStencilHasNoOffset) {
    const auto& cfg = cfg512();
    const Stencil g{{{0.5, 0.7, 0.5}, {0.8, 1.0, 0.8}, {0.5, 0.7, 0.5}}};
    const BeamCoord c{0.2, 1e-4};
    const auto e = refine_gaussian(g, default_stencil(cfg), c, cfg);
    EXPECT_DOUBLE_EQ(e.theta, 0.2);
    EXPECT_DOUBLE_EQ(e.s_hat, 1e-4);
    EXPECT_DOUBLE_EQ(e.range, range_of(cfg, 0.2, 1e-4));
}

TEST(RefineGaussian, ExactGaussianRecovery) {
    const auto& cfg = cfg512();
    const StencilSpacing h{0.002, 1.5e-5};
    const BeamCoord truth{-0.3137, 7.3e-5};
    const BeamCoord c{-0.3130, 8.0e-5};
    const double st = 0.0021, ss = 1.6e-5;
    Stencil g{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double t = c.theta + (j - 1) * h.theta - truth.theta;
            const double s = c.s_hat + (i - 1) * h.s_hat - truth.s_hat;
            g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                0.97 * std::exp(-t * t / (2 * st * st) - s * s / (2 * ss * ss));
        }
    const auto e = refine_gaussian(g, h, c, cfg);
    EXPECT_NEAR(e.theta, truth.theta, 1e-9);
    EXPECT_NEAR(e.s_hat, truth.s_hat, 1e-9 * 1e-4);
}

TEST(RefineGaussian, Errors) {
    const auto& cfg = cfg512();
    const Stencil off{{{0.5, 0.7, 0.5}, {0.8, 0.9, 0.95}, {0.5, 0.7, 0.5}}};
    try {
        refine_gaussian(off, default_stencil(cfg), {0, 1e-4}, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Stencil);
    }
    const Stencil zero{{{0.0, 0.7, 0.5}, {0.8, 1.0, 0.8}, {0.5, 0.7, 0.5}}};
    try {
        refine_gaussian(zero, default_stencil(cfg), {0, 1e-4}, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NumericDomain);
    }
}

TEST(RefineBeam, NeverDegradesAndLocates) {
    const auto& cfg = cfg512();
    const auto grid = BeamspaceGrid::defaults(cfg);
    const double n = 512;
    for (auto [t, s] : {std::pair{0.1234, 9.1e-5}, {-0.5871, 3.3e-5}, {0.8012, 1.4e-5}}) {
        const auto h = chirp_vector(cfg, t, s);
        const BeamCoord start{grid.theta(static_cast<int>(std::lround((t + 1) * 256))),
                              grid.s_hat(static_cast<int>(std::lround(s / grid.s_hat(1))))};
        auto mm = MeasurementModel::noiseless();
        std::vector<PilotRecord> log;
        const auto rb = refine_beam(h.span(), cfg, mm, start, default_stencil(cfg), 4, &log);
        EXPECT_EQ(rb.pilots, log.size());
        EXPECT_EQ(rb.pilots, mm.draws());
        EXPECT_TRUE(rb.interpolated);
        EXPECT_GE(gain_at(cfg, {rb.estimate.theta, rb.estimate.s_hat}, h.span()), gain_at(cfg, start, h.span()));
        EXPECT_LE(std::abs(rb.estimate.theta - t), 0.1 * 2 / n);
        EXPECT_LE(std::abs(rb.estimate.s_hat - s), 0.1 * 7 / (n * n));
    }
}

TEST(Track, StaticUserNeverRetrains) {
    const auto& cfg = cfg512();
    std::vector<SourceLocation> traj(30, SourceLocation{70.0, -0.2});
    MeasurementModel mm(10.0, 8);
    const auto res = track(traj, cfg, ChannelModel::Exact, mm, TrackPolicy{}, trainer512());
    EXPECT_EQ(res.retrainings, 0u);
    EXPECT_FALSE(res.lost);
    EXPECT_GE(res.mean_rho(), 0.95);
    EXPECT_EQ(res.training_pilots + res.retrain_pilots + res.monitor_pilots, mm.draws());
}

TEST(Track, MovingUserRetrainsPeriodically) {
    const auto& cfg = cfg512();
    std::vector<SourceLocation> traj;
    for (int t = 0; t < 100; ++t)
        traj.push_back({40.0, 0.1 + t * 0.1 * 2 / 512.0});
    MeasurementModel mm(10.0, 21);
    const auto res = track(traj, cfg, ChannelModel::Exact, mm, TrackPolicy{}, trainer512());
    EXPECT_FALSE(res.lost);
    EXPECT_GE(res.mean_rho(), 0.85);
    EXPECT_GE(res.retrainings, 6u);
    EXPECT_LE(res.retrainings, 16u);
    EXPECT_EQ(res.training_pilots + res.retrain_pilots + res.monitor_pilots, mm.draws());
}

TEST(Track, ZeroThresholdNeverRetrains) {
    const auto& cfg = cfg512();
    std::vector<SourceLocation> traj;
    for (int t = 0; t < 40; ++t)
        traj.push_back({100.0, -0.3 + t * 0.1 * 2 / 512.0});
    MeasurementModel mm(10.0, 2);
    TrackPolicy policy;
    policy.gamma = 0.0;
    const auto res = track(traj, cfg, ChannelModel::Fresnel, mm, policy, trainer512());
    EXPECT_EQ(res.retrainings, 0u);
    // beyond the 3 dB ellipse (half-width ~0.9/N) the held beam is below 1/sqrt(2)
    const auto fit = fit_high_mainlobe(cfg);
    const auto ell = contour_ellipse(fit, fit.peak_gain / std::sqrt(2.0));
    const int past = static_cast<int>(std::ceil(2 * ell.semi_theta / (0.1 * 2 / 512.0)));
    ASSERT_LT(past, 40);
    EXPECT_LT(res.slots.back().rho, 1 / std::sqrt(2.0));
    EXPECT_THROW(track(traj, cfg, ChannelModel::Fresnel, mm, TrackPolicy{1.5}, trainer512()), Error);
}

TEST(Track, UserLeavingCoverageIsLost) {
    const auto& cfg = cfg512();
    std::vector<SourceLocation> traj;
    for (int t = 0; t < 12; ++t)
        traj.push_back({50.0, t < 4 ? 0.2 : -0.6});
    MeasurementModel mm(10.0, 4);
    const auto res = track(traj, cfg, ChannelModel::Exact, mm, TrackPolicy{}, trainer512());
    EXPECT_TRUE(res.lost);
    EXPECT_EQ(res.lost_slot, 5u);
}

TEST(RefineBeam, GridStartBetweenRows) {
    // halfway between two default rows the fine climb stalls on a local maximum
    const auto& cfg = cfg512();
    std::mt19937_64 rng(derive_seed(20240628, 10));
    std::uniform_real_distribution<double> ut(-0.9, 0.9);
    std::uniform_real_distribution<double> ur(std::log(10.0), std::log(100.0));
    const double r = std::exp(ur(rng));
    const SourceLocation loc{r, ut(rng)};
    const auto truth = surrogate_coords(cfg, loc);
    const auto h = steering_fresnel(cfg, loc);
    auto mm = MeasurementModel::noiseless();
    const auto start = train_exhaustive(h.span(), polar_codebook(cfg), cfg, mm).selected;
    auto m1 = MeasurementModel::noiseless();
    const auto fine = refine_beam(h.span(), cfg, m1, start, default_stencil(cfg));
    auto m2 = MeasurementModel::noiseless();
    const auto both = refine_from_grid(h.span(), cfg, m2, start, default_stencil(cfg));
    EXPECT_LT(fine.best_gain, 0.6);
    EXPECT_GT(both.best_gain, 0.95);
    EXPECT_EQ(both.pilots, m2.draws());
    EXPECT_LE(std::abs(both.estimate.theta - truth.theta), 0.1 * 2 / 512.0);
    EXPECT_LE(std::abs(both.estimate.s_hat - truth.s_hat), 0.1 * 7 / (512.0 * 512.0));
    EXPECT_NEAR(both.estimate.range / loc.range, 1.0, 0.05);
}
