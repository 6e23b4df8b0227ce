#include "nfb/mainlobe.hpp"

#include "nfb/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <utility>

namespace nfb {

namespace {

constexpr double kPi = std::numbers::pi;
const double kHalfPowerAmp = 1.0 / std::sqrt(2.0);

double focus_gain(const ArrayConfig& cfg, std::span<const cdouble> focused, double theta, double s_hat) {
    const auto b = chirp_vector(cfg, theta, s_hat);
    return std::abs(inner(b.span(), focused));
}

double crossing(double x0, double g0, double x1, double g1, double level) {
    return x0 + (level - g0) / (g1 - g0) * (x1 - x0);
}

} // namespace

const char* to_string(Axis axis) noexcept {
    return axis == Axis::Angle ? "angle" : "surrogate";
}

CrossSection cross_section(const ArrayConfig& cfg, BeamCoord center, Axis axis, double halfwidth, double resolution) {
    if (!(resolution > 0.0) || !(halfwidth > resolution))
        throw Error(ErrorCode::Configuration, "cross section needs resolution > 0 and halfwidth > resolution");
    const auto focused = chirp_vector(cfg, center.theta, center.s_hat);
    const auto half = static_cast<long>(std::floor(halfwidth / resolution));

    CrossSection out{axis, axis == Axis::Angle ? center.s_hat : center.theta, {}, resolution};
    out.samples.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long i = -half; i <= half; ++i) {
        const double off = static_cast<double>(i) * resolution;
        const double theta = axis == Axis::Angle ? center.theta + off : center.theta;
        const double s = axis == Axis::Surrogate ? center.s_hat + off : center.s_hat;
        const double coord = axis == Axis::Angle ? theta : s;
        out.samples.push_back({coord, focus_gain(cfg, focused.span(), theta, s)});
    }
    return out;
}

double width_3db(const CrossSection& profile) {
    const auto& p = profile.samples;
    if (p.size() < 3)
        throw Error(ErrorCode::SpanTooNarrow, "profile has fewer than three samples");
    const auto peak_it = std::max_element(p.begin(), p.end(),
                                          [](const ProfileSample& a, const ProfileSample& b) { return a.gain < b.gain; });
    const auto peak = static_cast<std::size_t>(peak_it - p.begin());
    if (!(peak_it->gain >= kHalfPowerAmp + 1e-9))
        throw Error(ErrorCode::Validity, "profile peak is below the 3 dB level");

    std::size_t left = peak;
    while (left > 0 && p[left].gain >= kHalfPowerAmp)
        --left;
    std::size_t right = peak;
    while (right + 1 < p.size() && p[right].gain >= kHalfPowerAmp)
        ++right;
    if (p[left].gain >= kHalfPowerAmp || p[right].gain >= kHalfPowerAmp)
        throw Error(ErrorCode::SpanTooNarrow, "no 3 dB crossing inside the sampled span");

    const double x_left = crossing(p[left].coord, p[left].gain, p[left + 1].coord, p[left + 1].gain, kHalfPowerAmp);
    const double x_right = crossing(p[right - 1].coord, p[right - 1].gain, p[right].coord, p[right].gain, kHalfPowerAmp);
    return x_right - x_left;
}

HighMainlobeWidths predict_high_mainlobe_widths(const ArrayConfig& cfg) {
    const double n = cfg.num_antennas();
    return {2.0 / n, 7.0 / (n * n), cfg.half_wavelength()};
}

double MainlobeFit::evaluate(double theta, double s_hat) const noexcept {
    const double dt = theta - center.theta;
    const double ds = s_hat - center.s_hat;
    return peak_gain * std::exp(-dt * dt / (2.0 * sigma_theta * sigma_theta) - ds * ds / (2.0 * sigma_s * sigma_s));
}

double MainlobeFit::width_3db_theta() const noexcept { return 2.0 * sigma_theta * std::sqrt(std::numbers::ln2); }

double MainlobeFit::width_3db_s() const noexcept { return 2.0 * sigma_s * std::sqrt(std::numbers::ln2); }

std::vector<GainSample> sample_mainlobe(const ArrayConfig& cfg, BeamCoord center, double power_threshold,
                                        double theta_step, double s_step) {
    if (!(power_threshold > 0.0 && power_threshold < 1.0))
        throw Error(ErrorCode::Configuration, "power threshold must lie in (0, 1)");
    if (!(theta_step > 0.0) || !(s_step > 0.0))
        throw Error(ErrorCode::Configuration, "lattice steps must be positive");

    constexpr std::size_t kMaxSamples = 2'000'000;
    const auto focused = chirp_vector(cfg, center.theta, center.s_hat);
    std::map<std::pair<long, long>, double> seen;
    std::deque<std::pair<long, long>> frontier{{0, 0}};
    std::vector<std::pair<long, long>> inside;

    auto power = [&](std::pair<long, long> ij) {
        const double g = focus_gain(cfg, focused.span(), center.theta + ij.first * theta_step,
                                    center.s_hat + ij.second * s_step);
        return g * g;
    };

    seen[{0, 0}] = power({0, 0});
    while (!frontier.empty()) {
        const auto cur = frontier.front();
        frontier.pop_front();
        if (seen[cur] < power_threshold)
            continue;
        inside.push_back(cur);
        if (inside.size() > kMaxSamples)
            throw Error(ErrorCode::Validity, "mainlobe region is unbounded at this threshold");
        for (const auto& step : {std::pair<long, long>{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            const std::pair<long, long> nb{cur.first + step.first, cur.second + step.second};
            if (seen.contains(nb))
                continue;
            seen[nb] = power(nb);
            frontier.push_back(nb);
        }
    }

    std::sort(inside.begin(), inside.end());
    std::vector<GainSample> out;
    out.reserve(inside.size());
    for (const auto& ij : inside)
        out.push_back({center.theta + ij.first * theta_step, center.s_hat + ij.second * s_step, std::sqrt(seen[ij])});
    return out;
}

MainlobeFit gaussian_fit(std::span<const GainSample> region) {
    if (region.size() < 9)
        throw Error(ErrorCode::Rank, "Gaussian fit needs at least nine samples");
    std::set<double> thetas;
    std::set<double> surrogates;
    double t_mean = 0.0;
    double s_mean = 0.0;
    for (const auto& g : region) {
        if (!(g.gain > 0.0))
            throw Error(ErrorCode::NumericDomain, "Gaussian fit needs strictly positive gains");
        thetas.insert(g.theta);
        surrogates.insert(g.s_hat);
        t_mean += g.theta;
        s_mean += g.s_hat;
    }
    if (thetas.size() < 3 || surrogates.size() < 3)
        throw Error(ErrorCode::Rank, "fit region does not span both axes");
    t_mean /= static_cast<double>(region.size());
    s_mean /= static_cast<double>(region.size());

    double t_scale = 0.0;
    double s_scale = 0.0;
    for (const auto& g : region) {
        t_scale = std::max(t_scale, std::abs(g.theta - t_mean));
        s_scale = std::max(s_scale, std::abs(g.s_hat - s_mean));
    }

    const auto rows = static_cast<Eigen::Index>(region.size());
    Eigen::MatrixXd design(rows, 5);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& g = region[static_cast<std::size_t>(i)];
        const double t = (g.theta - t_mean) / t_scale;
        const double s = (g.s_hat - s_mean) / s_scale;
        design.row(i) << 1.0, t, t * t, s, s * s;
        rhs(i) = std::log(g.gain);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 5)
        throw Error(ErrorCode::Rank, "fit design matrix is rank deficient");
    const Eigen::VectorXd c = qr.solve(rhs);
    if (!(c(2) < 0.0) || !(c(4) < 0.0))
        throw Error(ErrorCode::Rank, "fitted surface has no interior maximum");

    MainlobeFit fit{};
    fit.center = {t_mean - t_scale * c(1) / (2.0 * c(2)), s_mean - s_scale * c(3) / (2.0 * c(4))};
    fit.sigma_theta = t_scale * std::sqrt(-1.0 / (2.0 * c(2)));
    fit.sigma_s = s_scale * std::sqrt(-1.0 / (2.0 * c(4)));
    fit.peak_gain = std::exp(c(0) - c(1) * c(1) / (4.0 * c(2)) - c(3) * c(3) / (4.0 * c(4)));

    double dev = 0.0;
    double dev_power = 0.0;
    for (const auto& g : region) {
        const double model = fit.evaluate(g.theta, g.s_hat);
        dev += std::abs(g.gain - model);
        dev_power += std::abs(g.gain * g.gain - model * model);
    }
    fit.mean_abs_dev = dev / static_cast<double>(region.size());
    fit.mean_abs_dev_power = dev_power / static_cast<double>(region.size());
    return fit;
}

MainlobeFit fit_high_mainlobe(const ArrayConfig& cfg, double power_threshold) {
    const auto w = predict_high_mainlobe_widths(cfg);
    const auto region = sample_mainlobe(cfg, {0.0, 0.0}, power_threshold, w.angle / 40.0, w.surrogate / 40.0);
    return gaussian_fit(region);
}

Ellipse contour_ellipse(const MainlobeFit& fit, double level) {
    if (!(level > 0.0) || !(level < fit.peak_gain))
        throw Error(ErrorCode::EmptyContour, "contour level must lie in (0, peak gain)");
    const double r = std::sqrt(2.0 * std::log(fit.peak_gain / level));
    return {fit.center, fit.sigma_theta * r, fit.sigma_s * r};
}

PspPrediction psp_predict(const ArrayConfig& cfg, double ds) {
    const double n = cfg.num_antennas();
    if (!(ds >= kPspFloor / (n * n) * (1.0 - 1e-12)))
        throw Error(ErrorCode::Validity, "surrogate offset is below the stationary-phase validity floor 20/N^2");
    return {ds, 2.0 * n * ds / cfg.angle_scale(), 1.0 / (n * std::sqrt(ds))};
}

namespace detail {

Extent plateau_extent(std::span<const double> gains) {
    if (gains.size() < 8)
        throw Error(ErrorCode::Validity, "profile too short for plateau detection");
    double level = 0.5 * *std::max_element(gains.begin(), gains.end());
    Extent ext{0, 0, level, 0.0};
    for (int iter = 0; iter < 100; ++iter) {
        std::size_t lo = 0;
        while (gains[lo] < level)
            ++lo;
        std::size_t hi = gains.size() - 1;
        while (gains[hi] < level)
            --hi;
        if (lo == 0 || hi == gains.size() - 1)
            throw Error(ErrorCode::Validity, "plateau extent reaches the end of the profile");
        const std::size_t q = (hi - lo) / 4;
        const double plateau = std::accumulate(gains.begin() + static_cast<std::ptrdiff_t>(lo + q),
                                               gains.begin() + static_cast<std::ptrdiff_t>(hi - q + 1), 0.0) /
                               static_cast<double>(hi - lo - 2 * q + 1);
        const bool settled = iter > 0 && lo == ext.lo && hi == ext.hi;
        ext = {lo, hi, level, plateau};
        if (settled)
            return ext;
        level = 0.5 * plateau;
    }
    throw Error(ErrorCode::Validity, "plateau level did not settle");
}

} // namespace detail

LowMainlobeMeasurement low_mainlobe_measure(const ArrayConfig& cfg, double ds, double resolution) {
    const int n = cfg.num_antennas();
    if (!(resolution > 0.0) || resolution > 1.0 / (4.0 * n) * (1.0 + 1e-12))
        throw Error(ErrorCode::Resolution, "low mainlobe measurement needs resolution <= 1/(4N)");
    if (!(ds > 0.0))
        throw Error(ErrorCode::Validity, "surrogate offset must be positive");

    // One full period of the angle response, centered on the focus.
    const double period = 2.0 / cfg.angle_scale();
    const auto count = static_cast<std::size_t>(std::ceil(period / resolution));
    const double step = period / static_cast<double>(count);
    const double half = 0.5 * static_cast<double>(count);

    std::vector<double> offsets(count);
    std::vector<double> gains(count);
    const auto delta = cfg.offsets();
    const double kappa = cfg.angle_scale();
    for (std::size_t i = 0; i < count; ++i) {
        const double off = (static_cast<double>(i) - half) * step;
        cdouble acc{};
        for (const double dm : delta)
            acc += std::polar(1.0, kPi * dm * kappa * off - kPi * dm * dm * ds);
        offsets[i] = off;
        gains[i] = std::abs(acc) / n;
    }

    const auto ext = detail::plateau_extent(gains);
    const double left = crossing(offsets[ext.lo - 1], gains[ext.lo - 1], offsets[ext.lo], gains[ext.lo], ext.level);
    const double right = crossing(offsets[ext.hi], gains[ext.hi], offsets[ext.hi + 1], gains[ext.hi + 1], ext.level);
    if (right - left < 8.0 / (n * kappa))
        throw Error(ErrorCode::Validity, "no low-mainlobe plateau: extent narrower than four beamwidths");

    const double avg = std::accumulate(gains.begin() + static_cast<std::ptrdiff_t>(ext.lo),
                                       gains.begin() + static_cast<std::ptrdiff_t>(ext.hi + 1), 0.0) /
                       static_cast<double>(ext.hi - ext.lo + 1);
    return {ds, right - left, avg, ext.plateau, left, right};
}

EnergySplit energy_split(const BeamspaceMap& map) {
    const auto& grid = map.grid();
    const int A = grid.angle_count();
    const int S = grid.row_count();
    enum class Part : unsigned char { Side, Low, High };
    std::vector<Part> part(grid.size(), Part::Side);
    auto at = [A](int l, int k) { return static_cast<std::size_t>(l) * static_cast<std::size_t>(A) + static_cast<std::size_t>(k); };

    const auto pk = map.peak();
    if (pk.gain >= kHalfPowerAmp) {
        std::deque<std::pair<int, int>> frontier{{pk.row, pk.angle}};
        part[at(pk.row, pk.angle)] = Part::High;
        while (!frontier.empty()) {
            const auto [l, k] = frontier.front();
            frontier.pop_front();
            for (const auto& [dl, dk] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                const int nl = l + dl;
                const int nk = ((k + dk) % A + A) % A;
                if (nl < 0 || nl >= S || part[at(nl, nk)] == Part::High || map.gain(nl, nk) < kHalfPowerAmp)
                    continue;
                part[at(nl, nk)] = Part::High;
                frontier.emplace_back(nl, nk);
            }
        }
    }

    std::vector<double> rotated(static_cast<std::size_t>(A));
    for (int l = 0; l < S; ++l) {
        int best = 0;
        for (int k = 1; k < A; ++k)
            if (map.gain(l, k) > map.gain(l, best))
                best = k;
        const int shift = best - A / 2;
        for (int i = 0; i < A; ++i)
            rotated[static_cast<std::size_t>(i)] = map.gain(l, ((i + shift) % A + A) % A);
        try {
            const auto ext = detail::plateau_extent(rotated);
            for (std::size_t i = ext.lo; i <= ext.hi; ++i) {
                const auto idx = at(l, ((static_cast<int>(i) + shift) % A + A) % A);
                if (part[idx] == Part::Side)
                    part[idx] = Part::Low;
            }
        } catch (const Error&) {
            // no plateau on this row
        }
    }

    EnergySplit out{0.0, 0.0, 0.0, 0.0};
    for (int l = 0; l < S; ++l) {
        for (int k = 0; k < A; ++k) {
            const double e = std::norm(map.coeff(l, k));
            out.total += e;
            switch (part[at(l, k)]) {
            case Part::High: out.high += e; break;
            case Part::Low: out.low += e; break;
            case Part::Side: out.side += e; break;
            }
        }
    }
    return out;
}

} // namespace nfb
