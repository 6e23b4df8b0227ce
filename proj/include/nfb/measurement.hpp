#pragma once

#include "nfb/array_channel.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace nfb {

/// Uplink pilot observation y = <w, h> + n with circular Gaussian n.
///
/// SNR is per antenna element: with unit-norm w and h the noise variance is
/// 1 / (N * snr), so a perfectly matched beam sees N * snr. An infinite SNR
/// gives noiseless observations (no draws are consumed).
///
/// Draws come from one mt19937_64 stream seeded with `seed`; the k-th
/// observation is therefore a pure function of (seed, k).
class MeasurementModel {
public:
    MeasurementModel(double snr_db, std::uint64_t seed);

    static MeasurementModel noiseless() { return MeasurementModel(kNoiseless, 0); }
    static constexpr double kNoiseless = std::numeric_limits<double>::infinity();

    cdouble observe(std::span<const cdouble> w, std::span<const cdouble> h);
    /// Noisy pilot whose noiseless value is already known.
    cdouble observe_value(cdouble clean, std::size_t num_antennas);

    double snr_db() const noexcept { return snr_db_; }
    std::uint64_t seed() const noexcept { return seed_; }
    bool is_noiseless() const noexcept { return noiseless_; }
    /// Pilots observed so far.
    std::uint64_t draws() const noexcept { return draws_; }
    double noise_variance(std::size_t num_antennas) const noexcept;

private:
    double snr_db_;
    std::uint64_t seed_;
    bool noiseless_;
    std::uint64_t draws_ = 0;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Adds i.i.d. CN(0, sigma^2) to every element with sigma^2 = |h|^2 / (N * snr).
std::vector<cdouble> add_noise(std::span<const cdouble> h, double snr_db, std::mt19937_64& rng);

} // namespace nfb
