#include "nfb/measurement.hpp"

#include <cmath>

namespace nfb {

MeasurementModel::MeasurementModel(double snr_db, std::uint64_t seed)
    : snr_db_(snr_db), seed_(seed), noiseless_(std::isinf(snr_db) && snr_db > 0), engine_(seed) {}

double MeasurementModel::noise_variance(std::size_t num_antennas) const noexcept {
    if (noiseless_)
        return 0.0;
    return 1.0 / (static_cast<double>(num_antennas) * std::pow(10.0, snr_db_ / 10.0));
}

cdouble MeasurementModel::observe_value(cdouble clean, std::size_t num_antennas) {
    ++draws_;
    if (noiseless_)
        return clean;
    const double sd = std::sqrt(0.5 * noise_variance(num_antennas));
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return clean + cdouble{sd * re, sd * im};
}

cdouble MeasurementModel::observe(std::span<const cdouble> w, std::span<const cdouble> h) {
    return observe_value(inner(w, h), h.size());
}

std::vector<cdouble> add_noise(std::span<const cdouble> h, double snr_db, std::mt19937_64& rng) {
    std::vector<cdouble> y(h.begin(), h.end());
    if (std::isinf(snr_db) && snr_db > 0)
        return y;
    const double energy = norm(h) * norm(h);
    const double var = energy / (static_cast<double>(h.size()) * std::pow(10.0, snr_db / 10.0));
    const double sd = std::sqrt(0.5 * var);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : y) {
        const double re = normal(rng);
        const double im = normal(rng);
        v += cdouble{sd * re, sd * im};
    }
    return y;
}

} // namespace nfb
