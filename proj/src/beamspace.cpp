#include "nfb/beamspace.hpp"

#include "fft.hpp"
#include "nfb/csv.hpp"
#include "nfb/error.hpp"
#include "nfb/parallel.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace nfb {

namespace {

constexpr double kPi = std::numbers::pi;

void check_input(std::span<const cdouble> x, const ArrayConfig& cfg) {
    if (x.size() != static_cast<std::size_t>(cfg.num_antennas()))
        throw Error(ErrorCode::Shape, "input length " + std::to_string(x.size()) + " does not match " +
                                          std::to_string(cfg.num_antennas()) + " antennas");
}

// exp(j pi q) for q given as a double, reduced mod 2 first.
cdouble unit_phase(double half_turns) {
    const double r = std::fmod(half_turns, 2.0);
    return std::polar(1.0, kPi * r);
}

} // namespace

BeamspaceGrid::BeamspaceGrid(int angle_samples, std::vector<double> s_rows)
    : angles_(angle_samples), rows_(std::move(s_rows)) {
    if (angles_ < 1)
        throw Error(ErrorCode::Configuration, "angle sample count must be positive");
    if (rows_.empty())
        throw Error(ErrorCode::Configuration, "at least one surrogate row is required");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (!(rows_[i] >= 0.0) || !std::isfinite(rows_[i]))
            throw Error(ErrorCode::InvalidCoordinate, "surrogate rows must be finite and non-negative");
        if (i > 0 && !(rows_[i] > rows_[i - 1]))
            throw Error(ErrorCode::InvalidCoordinate, "surrogate rows must be strictly increasing");
    }
}

BeamspaceGrid BeamspaceGrid::uniform(int angle_samples, int rows, double s_max) {
    if (rows < 1)
        throw Error(ErrorCode::Configuration, "row count must be positive");
    if (rows > 1 && !(s_max > 0.0))
        throw Error(ErrorCode::Configuration, "s_max must be positive for more than one row");
    std::vector<double> s(static_cast<std::size_t>(rows));
    for (int l = 0; l < rows; ++l)
        s[static_cast<std::size_t>(l)] = l * s_max / rows;
    return BeamspaceGrid(angle_samples, std::move(s));
}

double BeamspaceGrid::default_s_max(const ArrayConfig& cfg, int rows) {
    const double n = cfg.num_antennas();
    return 16.0 * rows / (n * n);
}

BeamspaceGrid BeamspaceGrid::defaults(const ArrayConfig& cfg) {
    return uniform(kDefaultAngles, kDefaultRows, default_s_max(cfg));
}

BeamspaceMap::BeamspaceMap(BeamspaceGrid grid, std::vector<cdouble> coefficients)
    : grid_(std::move(grid)), coeffs_(std::move(coefficients)) {
    if (coeffs_.size() != grid_.size())
        throw Error(ErrorCode::Shape, "coefficient count does not match the grid");
}

std::span<const cdouble> BeamspaceMap::row(int l) const noexcept {
    return std::span<const cdouble>(coeffs_).subspan(index(l, 0), static_cast<std::size_t>(grid_.angle_count()));
}

double BeamspaceMap::row_energy(int l) const noexcept {
    double e = 0.0;
    for (const auto& c : row(l))
        e += std::norm(c);
    return e;
}

BeamspaceMap::Peak BeamspaceMap::peak() const noexcept {
    Peak best{0, 0, -1.0};
    for (int l = 0; l < grid_.row_count(); ++l)
        for (int k = 0; k < grid_.angle_count(); ++k)
            if (const double g = gain(l, k); g > best.gain)
                best = {l, k, g};
    return best;
}

SteeringVector chirp_vector(const ArrayConfig& cfg, double theta, double s_hat) {
    const auto n = static_cast<std::size_t>(cfg.num_antennas());
    const double amp = 1.0 / std::sqrt(static_cast<double>(n));
    const double lin = kPi * theta * cfg.angle_scale();
    SteeringVector out{std::vector<cdouble>(n), SteeringKind::Basis};
    for (std::size_t m = 0; m < n; ++m) {
        const double dm = cfg.offsets()[m];
        out.elements[m] = std::polar(amp, lin * dm - kPi * s_hat * dm * dm);
    }
    return out;
}

SteeringVector frft_basis(const ArrayConfig& cfg, double theta, double s_hat) {
    if (!(std::abs(theta) <= 1.0))
        throw Error(ErrorCode::InvalidCoordinate, "basis angle must satisfy |theta| <= 1");
    if (!(s_hat >= 0.0) || !std::isfinite(s_hat))
        throw Error(ErrorCode::InvalidCoordinate, "basis surrogate distance must be non-negative");
    return chirp_vector(cfg, theta, s_hat);
}

BeamspaceMap beamspace_direct(std::span<const cdouble> x, const BeamspaceGrid& grid, const ArrayConfig& cfg) {
    check_input(x, cfg);
    const int A = grid.angle_count();
    const int S = grid.row_count();
    std::vector<cdouble> out(grid.size());
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t l) {
        for (int k = 0; k < A; ++k) {
            const auto b = frft_basis(cfg, grid.theta(k), grid.s_hat(static_cast<int>(l)));
            out[l * static_cast<std::size_t>(A) + static_cast<std::size_t>(k)] = inner(b.span(), x);
        }
    });
    return BeamspaceMap(grid, std::move(out));
}

BeamspaceMap beamspace_fast(std::span<const cdouble> x, const BeamspaceGrid& grid, const ArrayConfig& cfg) {
    check_input(x, cfg);
    const int N = cfg.num_antennas();
    const int A = grid.angle_count();
    const int S = grid.row_count();
    if (A < N)
        throw Error(ErrorCode::Resolution, "fast transform needs at least as many angle samples as antennas");

    const auto n = static_cast<std::size_t>(N);
    const auto a = static_cast<std::size_t>(A);
    const double kappa = cfg.angle_scale();
    const bool plain_fft = cfg.half_wavelength();
    const double c0 = 0.5 * (N - 1);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));

    // Pre-twiddle exp(j pi kappa delta_m) and post-twiddle
    // exp(j 2 pi kappa c0 k / A) / sqrt(N) move the centered offsets onto
    // the 0-based DFT index.
    std::vector<cdouble> pre(n);
    for (std::size_t m = 0; m < n; ++m)
        pre[m] = plain_fft ? unit_phase(cfg.offsets()[m]) : std::polar(1.0, kPi * kappa * cfg.offsets()[m]);
    std::vector<cdouble> post(a);
    for (std::size_t k = 0; k < a; ++k) {
        post[k] = plain_fft ? scale * unit_phase(std::fmod(2.0 * c0 * static_cast<double>(k), 2.0 * A) / A)
                            : std::polar(scale, 2.0 * kPi * kappa * c0 * static_cast<double>(k) / A);
    }

    // Chirp-z kernel for non-half-wavelength spacing:
    // sum_m u_m W^{mk}, W = exp(-j 2 pi kappa / A), via Bluestein.
    std::size_t conv = 0;
    std::vector<cdouble> kernel_spectrum;
    std::vector<cdouble> in_chirp;
    std::vector<cdouble> out_chirp;
    if (!plain_fft) {
        conv = std::bit_ceil(n + a - 1);
        auto w = [&](double idx) { return std::polar(1.0, kPi * kappa * idx * idx / A); };
        kernel_spectrum.assign(conv, cdouble{});
        for (std::size_t i = 0; i < a; ++i)
            kernel_spectrum[i] = w(static_cast<double>(i));
        for (std::size_t i = 1; i < n; ++i)
            kernel_spectrum[conv - i] = w(static_cast<double>(i));
        detail::fft_forward(kernel_spectrum);
        in_chirp.resize(n);
        for (std::size_t m = 0; m < n; ++m)
            in_chirp[m] = std::conj(w(static_cast<double>(m)));
        out_chirp.resize(a);
        for (std::size_t k = 0; k < a; ++k)
            out_chirp[k] = std::conj(w(static_cast<double>(k))) / static_cast<double>(conv);
    }

    std::vector<cdouble> out(grid.size());
    parallel_for(static_cast<std::size_t>(S), [&](std::size_t l) {
        const double s = grid.s_hat(static_cast<int>(l));
        std::vector<cdouble> buf(plain_fft ? a : conv, cdouble{});
        for (std::size_t m = 0; m < n; ++m) {
            const double dm = cfg.offsets()[m];
            // conjugate chirp removes the row's quadratic phase
            cdouble u = x[m] * std::polar(1.0, kPi * s * dm * dm) * pre[m];
            if (!plain_fft)
                u *= in_chirp[m];
            buf[m] = u;
        }
        detail::fft_forward(buf);
        cdouble* dst = out.data() + l * a;
        if (plain_fft) {
            for (std::size_t k = 0; k < a; ++k)
                dst[k] = post[k] * buf[k];
        } else {
            for (std::size_t i = 0; i < conv; ++i)
                buf[i] *= kernel_spectrum[i];
            detail::fft_backward(buf);
            for (std::size_t k = 0; k < a; ++k)
                dst[k] = post[k] * out_chirp[k] * buf[k];
        }
    });
    return BeamspaceMap(grid, std::move(out));
}

std::vector<cdouble> synthesize(std::span<const Atom> atoms, const ArrayConfig& cfg) {
    std::vector<cdouble> out(static_cast<std::size_t>(cfg.num_antennas()), cdouble{});
    for (const auto& atom : atoms) {
        const auto b = chirp_vector(cfg, atom.theta, atom.s_hat);
        for (std::size_t m = 0; m < out.size(); ++m)
            out[m] += atom.weight * b[m];
    }
    return out;
}

void write_csv(std::ostream& os, const BeamspaceMap& map) {
    const auto& g = map.grid();
    os << "s_hat,theta_hat,re,im,gain\n";
    for (int l = 0; l < g.row_count(); ++l) {
        const auto s = csv::number(g.s_hat(l));
        for (int k = 0; k < g.angle_count(); ++k) {
            const auto c = map.coeff(l, k);
            csv::row(os, {s, csv::number(g.theta(k)), csv::number(c.real()), csv::number(c.imag()),
                          csv::number(std::abs(c))});
        }
    }
}

} // namespace nfb
