#pragma once

#include <cstddef>
#include <functional>

namespace nfb {

/// Worker count from NFB_THREADS (0 or unset = hardware concurrency).
unsigned thread_budget();

/// Runs body(i) for i in [0, count). Each index is processed exactly once and
/// writes only to its own slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace nfb
