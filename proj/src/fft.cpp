#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace nfb::detail {

namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_)
            fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t size, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_pair(size, sign);
        if (auto it = plans_.find(key); it != plans_.end())
            return it->second;
        // Planning scratch; FFTW_ESTIMATE leaves the arrays untouched.
        std::vector<std::complex<double>> scratch(size);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(size), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void execute(std::span<std::complex<double>> data, int sign) {
    if (data.empty())
        return;
    fftw_plan plan = cache().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

} // namespace

void fft_forward(std::span<std::complex<double>> data) { execute(data, FFTW_FORWARD); }

void fft_backward(std::span<std::complex<double>> data) { execute(data, FFTW_BACKWARD); }

} // namespace nfb::detail
