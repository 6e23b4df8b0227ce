#pragma once

#include <complex>
#include <span>

namespace nfb::detail {

/// Forward DFT X_k = sum_n x_n exp(-j 2 pi n k / M), M = data.size(), in place.
/// Plans are cached per size; execution is safe from concurrent threads.
void fft_forward(std::span<std::complex<double>> data);
/// Inverse without the 1/M scaling.
void fft_backward(std::span<std::complex<double>> data);

} // namespace nfb::detail
